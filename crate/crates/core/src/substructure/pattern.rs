use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::molgraph::{BondOrder, Element};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("empty pattern")]
    Empty,
    #[error("unknown element '{0}'")]
    UnknownElement(String),
    #[error("unknown atom flag '{0}'")]
    UnknownFlag(String),
    #[error("malformed bond '{0}'")]
    MalformedBond(String),
    #[error("bond {0}-{1} refers to a missing atom")]
    BondOutOfRange(usize, usize),
    #[error("duplicate bond {0}-{1}")]
    DuplicateBond(usize, usize),
    #[error("pattern graph is not connected")]
    Disconnected,
    #[error("atom-count patterns take a single atom and no bonds")]
    CountAtomsShape,
    #[error("unknown match mode '{0}'")]
    UnknownMode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    /// Distinct embeddings, one per matched atom set.
    CountEmbeddingsDedup,
    /// Atoms satisfying the single atom predicate.
    CountAtoms,
}

impl MatchMode {
    pub fn name(self) -> &'static str {
        match self {
            MatchMode::CountEmbeddingsDedup => "embeddings",
            MatchMode::CountAtoms => "atoms",
        }
    }
}

impl FromStr for MatchMode {
    type Err = PatternError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "embeddings" => Ok(MatchMode::CountEmbeddingsDedup),
            "atoms" => Ok(MatchMode::CountAtoms),
            other => Err(PatternError::UnknownMode(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AtomPredicate {
    /// Allowed elements; empty means any.
    pub elements: Vec<Element>,
    pub aromatic: Option<bool>,
    pub in_ring: Option<bool>,
    pub h_exact: Option<u8>,
    pub h_min: Option<u8>,
    pub degree: Option<usize>,
    pub charge: Option<i8>,
    /// Every incident bond is a plain single bond.
    pub saturated: bool,
    pub double_to: Vec<Element>,
    pub no_double_to: Vec<Element>,
    /// No neighbour carries a double bond to this element.
    pub no_neighbor_double_to: Vec<Element>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BondPredicate {
    pub a: usize,
    pub b: usize,
    /// Allowed orders; empty means any.
    pub orders: Vec<BondOrder>,
    pub in_ring: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub name: String,
    pub atoms: Vec<AtomPredicate>,
    pub bonds: Vec<BondPredicate>,
    pub mode: MatchMode,
}

fn parse_element(sym: &str) -> Result<Element, PatternError> {
    Element::from_symbol(sym).ok_or_else(|| PatternError::UnknownElement(sym.to_string()))
}

fn parse_atom(token: &str) -> Result<AtomPredicate, PatternError> {
    let mut parts = token.split(':');
    let mut atom = AtomPredicate::default();
    let elements = parts.next().unwrap_or("");
    if elements != "*" {
        for sym in elements.split(',') {
            atom.elements.push(parse_element(sym)?);
        }
    }
    for flag in parts {
        let bad = || PatternError::UnknownFlag(flag.to_string());
        match flag {
            "a" => atom.aromatic = Some(true),
            "A" => atom.aromatic = Some(false),
            "R" => atom.in_ring = Some(true),
            "!R" => atom.in_ring = Some(false),
            "H+" => atom.h_min = Some(1),
            "sat" => atom.saturated = true,
            _ => {
                if let Some(sym) = flag.strip_prefix("!nbr=") {
                    atom.no_neighbor_double_to.push(parse_element(sym)?);
                } else if let Some(sym) = flag.strip_prefix("!=") {
                    atom.no_double_to.push(parse_element(sym)?);
                } else if let Some(sym) = flag.strip_prefix('=') {
                    atom.double_to.push(parse_element(sym)?);
                } else if let Some(n) = flag.strip_prefix('H') {
                    atom.h_exact = Some(n.parse().map_err(|_| bad())?);
                } else if let Some(n) = flag.strip_prefix('D') {
                    atom.degree = Some(n.parse().map_err(|_| bad())?);
                } else if let Some(n) = flag.strip_prefix('q') {
                    atom.charge = Some(n.parse().map_err(|_| bad())?);
                } else {
                    return Err(bad());
                }
            }
        }
    }
    Ok(atom)
}

fn parse_bond(token: &str) -> Result<BondPredicate, PatternError> {
    let bad = || PatternError::MalformedBond(token.to_string());
    let mut parts = token.split(':');
    let ends = parts.next().ok_or_else(bad)?;
    let (a, b) = ends.split_once('-').ok_or_else(bad)?;
    let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    let orders_spec = parts.next().ok_or_else(bad)?;
    let mut orders = Vec::new();
    if orders_spec != "~" {
        for c in orders_spec.chars() {
            orders.push(match c {
                's' => BondOrder::Single,
                'd' => BondOrder::Double,
                't' => BondOrder::Triple,
                'a' => BondOrder::Aromatic,
                _ => return Err(bad()),
            });
        }
    }
    let in_ring = match parts.next() {
        None => None,
        Some("r") => Some(true),
        Some("!r") => Some(false),
        Some(_) => return Err(bad()),
    };
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(BondPredicate { a, b, orders, in_ring })
}

impl Pattern {
    /// Parses `ATOM ATOM ... | BOND BOND ...` (see the registry file header).
    pub fn parse(name: &str, mode: MatchMode, text: &str) -> Result<Pattern, PatternError> {
        let (atom_part, bond_part) = text.split_once('|').unwrap_or((text, ""));
        let atoms = atom_part
            .split_whitespace()
            .map(parse_atom)
            .collect::<Result<Vec<_>, _>>()?;
        let bonds = bond_part
            .split_whitespace()
            .map(parse_bond)
            .collect::<Result<Vec<_>, _>>()?;
        let p = Pattern {
            name: name.to_string(),
            atoms,
            bonds,
            mode,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PatternError> {
        let n = self.atoms.len();
        if n == 0 {
            return Err(PatternError::Empty);
        }
        if self.mode == MatchMode::CountAtoms && (n != 1 || !self.bonds.is_empty()) {
            return Err(PatternError::CountAtomsShape);
        }
        let mut seen = std::collections::HashSet::new();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for b in &self.bonds {
            if b.a >= n || b.b >= n || b.a == b.b {
                return Err(PatternError::BondOutOfRange(b.a, b.b));
            }
            if !seen.insert((b.a.min(b.b), b.a.max(b.b))) {
                return Err(PatternError::DuplicateBond(b.a, b.b));
            }
            let (ra, rb) = (find(&mut parent, b.a), find(&mut parent, b.b));
            parent[ra] = rb;
        }
        let root = find(&mut parent, 0);
        if (1..n).any(|i| find(&mut parent, i) != root) {
            return Err(PatternError::Disconnected);
        }
        Ok(())
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_between(&self, u: usize, v: usize) -> Option<&BondPredicate> {
        self.bonds
            .iter()
            .find(|b| (b.a == u && b.b == v) || (b.a == v && b.b == u))
    }
}

impl fmt::Display for AtomPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.elements.is_empty() {
            f.write_str("*")?;
        } else {
            let syms: Vec<&str> = self.elements.iter().map(|e| e.symbol()).collect();
            f.write_str(&syms.join(","))?;
        }
        match self.aromatic {
            Some(true) => f.write_str(":a")?,
            Some(false) => f.write_str(":A")?,
            None => {}
        }
        match self.in_ring {
            Some(true) => f.write_str(":R")?,
            Some(false) => f.write_str(":!R")?,
            None => {}
        }
        if let Some(h) = self.h_exact {
            write!(f, ":H{h}")?;
        }
        if self.h_min.is_some() {
            f.write_str(":H+")?;
        }
        if let Some(d) = self.degree {
            write!(f, ":D{d}")?;
        }
        if let Some(q) = self.charge {
            write!(f, ":q{q}")?;
        }
        if self.saturated {
            f.write_str(":sat")?;
        }
        for e in &self.double_to {
            write!(f, ":={}", e.symbol())?;
        }
        for e in &self.no_double_to {
            write!(f, ":!={}", e.symbol())?;
        }
        for e in &self.no_neighbor_double_to {
            write!(f, ":!nbr={}", e.symbol())?;
        }
        Ok(())
    }
}

impl fmt::Display for BondPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}:", self.a, self.b)?;
        if self.orders.is_empty() {
            f.write_str("~")?;
        }
        for o in &self.orders {
            f.write_str(match o {
                BondOrder::Single => "s",
                BondOrder::Double => "d",
                BondOrder::Triple => "t",
                BondOrder::Aromatic => "a",
            })?;
        }
        match self.in_ring {
            Some(true) => f.write_str(":r"),
            Some(false) => f.write_str(":!r"),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Pattern {
    /// The serialization accepted by [`Pattern::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms: Vec<String> = self.atoms.iter().map(|a| a.to_string()).collect();
        f.write_str(&atoms.join(" "))?;
        if !self.bonds.is_empty() {
            let bonds: Vec<String> = self.bonds.iter().map(|b| b.to_string()).collect();
            write!(f, " | {}", bonds.join(" "))?;
        }
        Ok(())
    }
}
