//! Delta representation: ordered migration rules between two metamodels.

use evolvekit_constraints::Expr;
use evolvekit_core::Literal;

#[derive(Debug, Clone)]
pub struct MigrationSpec {
    pub name: String,
    /// (metamodel name, version) the rules read from.
    pub src: (String, String),
    /// (metamodel name, version) the rules write to.
    pub dst: (String, String),
    pub rules: Vec<MclRule>,
    /// When true, classes without an explicit rule map identically if the
    /// evolved metamodel has a class of the same name.
    pub identity_for_unmapped: bool,
}

impl MigrationSpec {
    /// Map rules in file order.
    pub fn map_rules(&self) -> impl Iterator<Item = (usize, &MapRule)> {
        self.rules.iter().enumerate().filter_map(|(i, r)| match r {
            MclRule::Map(m) => Some((i, m)),
            _ => None,
        })
    }

    pub fn add_rules(&self) -> impl Iterator<Item = (usize, &AddRule)> {
        self.rules.iter().enumerate().filter_map(|(i, r)| match r {
            MclRule::Add(a) => Some((i, a)),
            _ => None,
        })
    }

    /// Resolves an association name through the (first matching) rename rule.
    pub fn assoc_target<'a>(&'a self, name: &'a str) -> &'a str {
        self.rules
            .iter()
            .find_map(|r| match r {
                MclRule::MapAssoc { src, dst } if src == name => Some(dst.as_str()),
                _ => None,
            })
            .unwrap_or(name)
    }

    /// Stable display label for a rule, used in reports.
    pub fn rule_label(&self, index: usize) -> String {
        format!("#{} {}", index + 1, self.rules[index])
    }
}

#[derive(Debug, Clone)]
pub enum MclRule {
    Map(MapRule),
    MapAssoc { src: String, dst: String },
    Add(AddRule),
}

/// `map Src => Dst [when cond | otherwise] [reparent Anc] [with { ... }]`.
/// A null destination drops matched objects and their subtrees.
#[derive(Debug, Clone)]
pub struct MapRule {
    pub src_class: String,
    pub dst_class: Option<String>,
    /// Condition over the free variable `self` (a source object).
    pub condition: Option<Expr>,
    /// Fallback rule: tried after every non-otherwise rule for the class.
    pub otherwise: bool,
    /// Re-anchor the image under the image of the nearest source ancestor of
    /// this class instead of under the parent image.
    pub reparent: Option<String>,
    pub commands: Vec<Command>,
}

/// `add New in Container [when cond] [with { ... }]`, applied to every
/// migrated container image.
#[derive(Debug, Clone)]
pub struct AddRule {
    pub new_class: String,
    pub container_class: String,
    /// Condition over the free variable `parent` (a migrated container).
    pub condition: Option<Expr>,
    pub commands: Vec<Command>,
}

#[derive(Debug, Clone)]
pub struct Command {
    pub target_attr: String,
    pub expr: CmdExpr,
}

/// Right-hand side of a command: literals, source/parent attribute reads,
/// and `+` (numeric addition, or concatenation when either side is a string).
#[derive(Debug, Clone)]
pub enum CmdExpr {
    Lit(Literal),
    SrcAttr(String),
    ParentAttr(String),
    Add(Box<CmdExpr>, Box<CmdExpr>),
}

impl CmdExpr {
    /// Source attribute names the expression reads.
    pub fn src_attrs(&self, out: &mut Vec<String>) {
        match self {
            CmdExpr::SrcAttr(a) => out.push(a.clone()),
            CmdExpr::Add(l, r) => {
                l.src_attrs(out);
                r.src_attrs(out);
            }
            _ => {}
        }
    }
}

impl std::fmt::Display for CmdExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdExpr::Lit(l) => write!(f, "{l}"),
            CmdExpr::SrcAttr(a) => write!(f, "src.{a}"),
            CmdExpr::ParentAttr(a) => write!(f, "parent.{a}"),
            CmdExpr::Add(l, r) => write!(f, "{l} + {r}"),
        }
    }
}

impl std::fmt::Display for MclRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MclRule::Map(m) => {
                write!(f, "map {} => {}", m.src_class, m.dst_class.as_deref().unwrap_or("null"))?;
                if let Some(c) = &m.condition {
                    write!(f, " when {c}")?;
                }
                if m.otherwise {
                    write!(f, " otherwise")?;
                }
                if let Some(r) = &m.reparent {
                    write!(f, " reparent {r}")?;
                }
                Ok(())
            }
            MclRule::MapAssoc { src, dst } => write!(f, "map assoc {src} => {dst}"),
            MclRule::Add(a) => {
                write!(f, "add {} in {}", a.new_class, a.container_class)?;
                if let Some(c) = &a.condition {
                    write!(f, " when {c}")?;
                }
                Ok(())
            }
        }
    }
}
