//! SMILES reader for the organic subset plus bracket atoms.
//!
//! Stereo marks and isotopes are accepted and dropped (reported as
//! [`ParseWarning`]s). Hydrogens written as their own bracket atoms are folded
//! into the hydrogen count of their heavy neighbour.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::{Atom, Bond, BondOrder, Element, MolecularGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedCharacter(char),
    UnknownElement(String),
    UnmatchedBracket,
    UnmatchedParenthesis,
    UnclosedRing(u16),
    RingBondConflict(u16),
    DuplicateBond,
    MissingAtom,
    DanglingBond,
    UnsupportedBond(char),
    ValenceOverflow { element: Element, valence: u8 },
    InvalidBracketAtom,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Empty => write!(f, "empty SMILES"),
            ParseErrorKind::UnexpectedCharacter(c) => write!(f, "unexpected character '{c}'"),
            ParseErrorKind::UnknownElement(s) => write!(f, "unknown element '{s}'"),
            ParseErrorKind::UnmatchedBracket => write!(f, "unmatched bracket"),
            ParseErrorKind::UnmatchedParenthesis => write!(f, "unmatched parenthesis"),
            ParseErrorKind::UnclosedRing(n) => write!(f, "unclosed ring closure {n}"),
            ParseErrorKind::RingBondConflict(n) => {
                write!(f, "conflicting bond symbols on ring closure {n}")
            }
            ParseErrorKind::DuplicateBond => write!(f, "duplicate bond between the same atoms"),
            ParseErrorKind::MissingAtom => write!(f, "bond or branch without a preceding atom"),
            ParseErrorKind::DanglingBond => write!(f, "bond symbol not followed by an atom"),
            ParseErrorKind::UnsupportedBond(c) => write!(f, "unsupported bond symbol '{c}'"),
            ParseErrorKind::ValenceOverflow { element, valence } => {
                write!(f, "valence {valence} too high for {element}")
            }
            ParseErrorKind::InvalidBracketAtom => write!(f, "malformed bracket atom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SMILES parse error at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

/// Non-fatal notes about input features that were read but ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    IgnoredStereo { offset: usize },
    IgnoredIsotope { offset: usize },
}

fn err(offset: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { offset, kind }
}

#[derive(Clone, Copy)]
struct PendingBond {
    order: BondOrder,
}

struct OpenRing {
    atom: usize,
    bond: Option<PendingBond>,
    offset: usize,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    atom_offsets: Vec<usize>,
    bonds: Vec<Bond>,
    warnings: Vec<ParseWarning>,
}

/// Parses a SMILES string into a heavy-atom graph with rings perceived.
pub fn parse_smiles(text: &str) -> Result<MolecularGraph, ParseError> {
    parse_smiles_with_warnings(text).map(|(g, _)| g)
}

pub fn parse_smiles_with_warnings(
    text: &str,
) -> Result<(MolecularGraph, Vec<ParseWarning>), ParseError> {
    let trimmed = text.trim_start();
    let lead = text.len() - trimmed.len();
    // Anything after the first whitespace is a title, as in SMILES files.
    let body = trimmed.split_whitespace().next().unwrap_or("");
    if body.is_empty() {
        return Err(err(0, ParseErrorKind::Empty));
    }
    let mut parser = Parser {
        bytes: body.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        atom_offsets: Vec::new(),
        bonds: Vec::new(),
        warnings: Vec::new(),
    };
    parser.run().map_err(|mut e| {
        e.offset += lead;
        e
    })?;
    let Parser {
        atoms,
        atom_offsets,
        bonds,
        warnings,
        ..
    } = parser;
    let (atoms, atom_offsets, bonds) = fold_hydrogens(atoms, atom_offsets, bonds);
    let atoms = assign_implicit_hydrogens(atoms, &atom_offsets, &bonds).map_err(|mut e| {
        e.offset += lead;
        e
    })?;
    for w in &warnings {
        log::debug!("{text}: {w:?}");
    }
    let graph = MolecularGraph::new(atoms, bonds)
        .map_err(|_| err(lead, ParseErrorKind::DuplicateBond))?
        .perceive_rings();
    Ok((graph, warnings))
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), ParseError> {
        let mut prev: Option<usize> = None;
        let mut pending: Option<(PendingBond, usize)> = None;
        let mut branches: Vec<(usize, usize)> = Vec::new();
        let mut open_rings: BTreeMap<u16, OpenRing> = BTreeMap::new();

        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    let atom = prev.ok_or_else(|| err(start, ParseErrorKind::MissingAtom))?;
                    if pending.is_some() {
                        return Err(err(start, ParseErrorKind::DanglingBond));
                    }
                    branches.push((atom, start));
                    self.pos += 1;
                }
                b')' => {
                    if pending.is_some() {
                        return Err(err(start, ParseErrorKind::DanglingBond));
                    }
                    let (atom, _) = branches
                        .pop()
                        .ok_or_else(|| err(start, ParseErrorKind::UnmatchedParenthesis))?;
                    prev = Some(atom);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' | b'$' => {
                    if prev.is_none() {
                        return Err(err(start, ParseErrorKind::MissingAtom));
                    }
                    if pending.is_some() {
                        return Err(err(start, ParseErrorKind::UnexpectedCharacter(c as char)));
                    }
                    let order = match c {
                        b'-' => BondOrder::Single,
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        b':' => BondOrder::Aromatic,
                        b'/' | b'\\' => {
                            self.warnings.push(ParseWarning::IgnoredStereo { offset: start });
                            BondOrder::Single
                        }
                        _ => return Err(err(start, ParseErrorKind::UnsupportedBond(c as char))),
                    };
                    pending = Some((PendingBond { order }, start));
                    self.pos += 1;
                }
                b'.' => {
                    if pending.is_some() {
                        return Err(err(start, ParseErrorKind::DanglingBond));
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let atom = prev.ok_or_else(|| err(start, ParseErrorKind::MissingAtom))?;
                    let number = self.ring_number()?;
                    let bond = pending.take().map(|(b, _)| b);
                    match open_rings.remove(&number) {
                        Some(open) => {
                            let order = match (open.bond, bond) {
                                (Some(a), Some(b)) if a.order != b.order => {
                                    return Err(err(start, ParseErrorKind::RingBondConflict(number)))
                                }
                                (Some(a), _) => Some(a.order),
                                (None, Some(b)) => Some(b.order),
                                (None, None) => None,
                            };
                            self.add_bond(open.atom, atom, order, start)?;
                        }
                        None => {
                            open_rings.insert(
                                number,
                                OpenRing {
                                    atom,
                                    bond,
                                    offset: start,
                                },
                            );
                        }
                    }
                }
                b'[' => {
                    let idx = self.bracket_atom()?;
                    if let Some(p) = prev {
                        let order = pending.take().map(|(b, _)| b.order);
                        self.add_bond(p, idx, order, start)?;
                    } else if let Some((_, off)) = pending {
                        return Err(err(off, ParseErrorKind::MissingAtom));
                    }
                    prev = Some(idx);
                }
                _ => {
                    let idx = self.organic_atom()?;
                    if let Some(p) = prev {
                        let order = pending.take().map(|(b, _)| b.order);
                        self.add_bond(p, idx, order, start)?;
                    } else if let Some((_, off)) = pending {
                        return Err(err(off, ParseErrorKind::MissingAtom));
                    }
                    prev = Some(idx);
                }
            }
        }
        if let Some((_, off)) = pending {
            return Err(err(off, ParseErrorKind::DanglingBond));
        }
        if let Some((_, off)) = branches.first() {
            return Err(err(*off, ParseErrorKind::UnmatchedParenthesis));
        }
        if let Some((number, open)) = open_rings.iter().next() {
            return Err(err(open.offset, ParseErrorKind::UnclosedRing(*number)));
        }
        if self.atoms.is_empty() {
            return Err(err(0, ParseErrorKind::Empty));
        }
        Ok(())
    }

    fn ring_number(&mut self) -> Result<u16, ParseError> {
        let start = self.pos;
        if self.peek() == Some(b'%') {
            let digits = self.bytes.get(start + 1..start + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    Ok(((d[0] - b'0') * 10 + (d[1] - b'0')) as u16)
                }
                _ => Err(err(start, ParseErrorKind::UnexpectedCharacter('%'))),
            }
        } else {
            let d = self.bytes[start] - b'0';
            self.pos += 1;
            Ok(d as u16)
        }
    }

    fn add_bond(
        &mut self,
        u: usize,
        v: usize,
        order: Option<BondOrder>,
        offset: usize,
    ) -> Result<(), ParseError> {
        if u == v
            || self
                .bonds
                .iter()
                .any(|b| b.a == u.min(v) && b.b == u.max(v))
        {
            return Err(err(offset, ParseErrorKind::DuplicateBond));
        }
        let order = order.unwrap_or(if self.atoms[u].aromatic && self.atoms[v].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        });
        self.bonds.push(Bond::new(u, v, order));
        Ok(())
    }

    fn push_atom(&mut self, atom: Atom, offset: usize) -> usize {
        self.atoms.push(atom);
        self.atom_offsets.push(offset);
        self.atoms.len() - 1
    }

    fn organic_atom(&mut self) -> Result<usize, ParseError> {
        let start = self.pos;
        let c = self.bytes[start];
        let next = self.bytes.get(start + 1).copied();
        let (symbol, len, aromatic) = match (c, next) {
            (b'C', Some(b'l')) => ("Cl", 2, false),
            (b'B', Some(b'r')) => ("Br", 2, false),
            (b'B', _) => ("B", 1, false),
            (b'C', _) => ("C", 1, false),
            (b'N', _) => ("N", 1, false),
            (b'O', _) => ("O", 1, false),
            (b'P', _) => ("P", 1, false),
            (b'S', _) => ("S", 1, false),
            (b'F', _) => ("F", 1, false),
            (b'I', _) => ("I", 1, false),
            (b'b', _) => ("B", 1, true),
            (b'c', _) => ("C", 1, true),
            (b'n', _) => ("N", 1, true),
            (b'o', _) => ("O", 1, true),
            (b'p', _) => ("P", 1, true),
            (b's', _) => ("S", 1, true),
            (c, _) if c.is_ascii_alphabetic() || c == b'*' => {
                return Err(err(
                    start,
                    ParseErrorKind::UnknownElement((c as char).to_string()),
                ))
            }
            (c, _) => {
                let ch = std::str::from_utf8(&self.bytes[start..])
                    .ok()
                    .and_then(|s| s.chars().next())
                    .unwrap_or(c as char);
                return Err(err(start, ParseErrorKind::UnexpectedCharacter(ch)));
            }
        };
        self.pos += len;
        let mut atom = Atom::new(Element::from_symbol(symbol).expect("organic subset symbol"));
        atom.aromatic = aromatic;
        Ok(self.push_atom(atom, start))
    }

    fn bracket_atom(&mut self) -> Result<usize, ParseError> {
        let start = self.pos;
        let close = self.bytes[start..]
            .iter()
            .position(|&b| b == b']')
            .map(|i| start + i)
            .ok_or_else(|| err(start, ParseErrorKind::UnmatchedBracket))?;
        let inner = &self.bytes[start + 1..close];
        if inner.contains(&b'[') {
            return Err(err(start, ParseErrorKind::UnmatchedBracket));
        }
        let mut i = 0;
        let at = |i: usize| inner.get(i).copied();

        // isotope
        let iso_start = i;
        while at(i).is_some_and(|b| b.is_ascii_digit()) {
            i += 1;
        }
        if i > iso_start {
            self.warnings.push(ParseWarning::IgnoredIsotope {
                offset: start + 1 + iso_start,
            });
        }

        // element symbol
        let sym_start = i;
        let (element, aromatic) = {
            let first = at(i).ok_or_else(|| err(start, ParseErrorKind::InvalidBracketAtom))?;
            if first.is_ascii_lowercase() {
                // aromatic: se, as, te, or a single-letter aromatic symbol
                let two = inner.get(i..i + 2);
                let (sym, len) = match two {
                    Some(b"se") => ("Se", 2),
                    Some(b"as") => ("As", 2),
                    Some(b"te") => ("Te", 2),
                    _ => match first {
                        b'b' => ("B", 1),
                        b'c' => ("C", 1),
                        b'n' => ("N", 1),
                        b'o' => ("O", 1),
                        b'p' => ("P", 1),
                        b's' => ("S", 1),
                        _ => {
                            return Err(err(
                                start + 1 + i,
                                ParseErrorKind::UnknownElement((first as char).to_string()),
                            ))
                        }
                    },
                };
                i += len;
                (Element::from_symbol(sym).expect("aromatic symbol"), true)
            } else if first.is_ascii_uppercase() {
                let two = inner
                    .get(i..i + 2)
                    .filter(|s| s[1].is_ascii_lowercase())
                    .and_then(|s| std::str::from_utf8(s).ok())
                    .and_then(Element::from_symbol);
                if let Some(e) = two {
                    i += 2;
                    (e, false)
                } else {
                    let one = std::str::from_utf8(&inner[i..i + 1]).unwrap_or("");
                    let e = Element::from_symbol(one).ok_or_else(|| {
                        err(
                            start + 1 + i,
                            ParseErrorKind::UnknownElement(one.to_string()),
                        )
                    })?;
                    i += 1;
                    (e, false)
                }
            } else if first == b'*' {
                return Err(err(
                    start + 1 + sym_start,
                    ParseErrorKind::UnknownElement("*".into()),
                ));
            } else {
                return Err(err(start + 1 + i, ParseErrorKind::InvalidBracketAtom));
            }
        };

        // chirality
        if at(i) == Some(b'@') {
            self.warnings.push(ParseWarning::IgnoredStereo {
                offset: start + 1 + i,
            });
            while at(i) == Some(b'@') {
                i += 1;
            }
            // extended forms such as @TH1, @SP2
            while at(i).is_some_and(|b| b.is_ascii_uppercase() && b != b'H') {
                i += 1;
            }
            while at(i).is_some_and(|b| b.is_ascii_digit()) {
                i += 1;
            }
        }

        // hydrogen count
        let mut hcount = 0u8;
        if at(i) == Some(b'H') {
            i += 1;
            hcount = 1;
            if let Some(d) = at(i).filter(u8::is_ascii_digit) {
                hcount = d - b'0';
                i += 1;
            }
        }

        // charge
        let mut charge: i8 = 0;
        if let Some(sign @ (b'+' | b'-')) = at(i) {
            let s: i8 = if sign == b'+' { 1 } else { -1 };
            i += 1;
            if let Some(d) = at(i).filter(u8::is_ascii_digit) {
                let mut mag = (d - b'0') as i8;
                i += 1;
                if let Some(d2) = at(i).filter(u8::is_ascii_digit) {
                    mag = mag * 10 + (d2 - b'0') as i8;
                    i += 1;
                }
                charge = s * mag;
            } else {
                charge = s;
                while at(i) == Some(sign) {
                    charge += s;
                    i += 1;
                }
            }
        }

        // atom class
        if at(i) == Some(b':') {
            i += 1;
            while at(i).is_some_and(|b| b.is_ascii_digit()) {
                i += 1;
            }
        }
        if i != inner.len() {
            return Err(err(start + 1 + i, ParseErrorKind::InvalidBracketAtom));
        }
        self.pos = close + 1;
        let atom = Atom {
            element,
            aromatic,
            formal_charge: charge,
            explicit_h: hcount,
            implicit_h: 0,
            bracket: true,
        };
        Ok(self.push_atom(atom, start))
    }
}

/// Removes neutral bracket hydrogens bonded to exactly one heavy atom,
/// crediting them to that atom's explicit hydrogen count.
fn fold_hydrogens(
    atoms: Vec<Atom>,
    offsets: Vec<usize>,
    bonds: Vec<Bond>,
) -> (Vec<Atom>, Vec<usize>, Vec<Bond>) {
    let n = atoms.len();
    let mut degree = vec![0usize; n];
    for b in &bonds {
        degree[b.a] += 1;
        degree[b.b] += 1;
    }
    let removable: Vec<bool> = (0..n)
        .map(|i| {
            let a = &atoms[i];
            a.element == Element::H
                && a.formal_charge == 0
                && a.explicit_h == 0
                && degree[i] == 1
                && bonds.iter().any(|b| {
                    (b.a == i || b.b == i)
                        && b.order == BondOrder::Single
                        && atoms[b.other(i)].element != Element::H
                })
        })
        .collect();
    if !removable.iter().any(|&r| r) {
        return (atoms, offsets, bonds);
    }
    let mut atoms = atoms;
    for b in &bonds {
        for (h, heavy) in [(b.a, b.b), (b.b, b.a)] {
            if removable[h] {
                atoms[heavy].explicit_h += 1;
            }
        }
    }
    let mut remap = vec![usize::MAX; n];
    let mut kept_atoms = Vec::new();
    let mut kept_offsets = Vec::new();
    for i in 0..n {
        if !removable[i] {
            remap[i] = kept_atoms.len();
            kept_atoms.push(atoms[i].clone());
            kept_offsets.push(offsets[i]);
        }
    }
    let kept_bonds = bonds
        .iter()
        .filter(|b| !removable[b.a] && !removable[b.b])
        .map(|b| Bond::new(remap[b.a], remap[b.b], b.order))
        .collect();
    (kept_atoms, kept_offsets, kept_bonds)
}

fn assign_implicit_hydrogens(
    mut atoms: Vec<Atom>,
    offsets: &[usize],
    bonds: &[Bond],
) -> Result<Vec<Atom>, ParseError> {
    let n = atoms.len();
    let mut used = vec![0u8; n];
    let mut aromatic_bonds = vec![0u8; n];
    let mut multiple_bond = vec![false; n];
    for b in bonds {
        for x in [b.a, b.b] {
            used[x] += b.order.valence();
            if b.order == BondOrder::Aromatic {
                aromatic_bonds[x] += 1;
            }
            if matches!(b.order, BondOrder::Double | BondOrder::Triple) {
                multiple_bond[x] = true;
            }
        }
    }
    for i in 0..n {
        let atom = &mut atoms[i];
        if atom.bracket {
            continue;
        }
        // folded [H] neighbours still occupy valence
        used[i] += atom.explicit_h;
        let valences = atom.element.default_valences();
        let max = *valences.last().expect("organic subset has valences");
        if used[i] > max {
            return Err(err(
                offsets[i],
                ParseErrorKind::ValenceOverflow {
                    element: atom.element,
                    valence: used[i],
                },
            ));
        }
        atom.implicit_h = if atom.aromatic {
            // One valence unit goes to the delocalised system for C/B/N/P;
            // aromatic O and S donate a lone pair and keep no hydrogens.
            let donates_pair = matches!(atom.element, e if e == Element::O || e == Element::S);
            if donates_pair || multiple_bond[i] {
                0
            } else {
                valences[0].saturating_sub(used[i] + 1)
            }
        } else {
            let target = valences.iter().copied().find(|&v| v >= used[i]).unwrap_or(max);
            target - used[i]
        };
    }
    Ok(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ethanol() {
        let g = parse_smiles("CCO").unwrap();
        assert_eq!(g.atom_count(), 3);
        assert_eq!(g.bond_count(), 2);
        let symbols: Vec<_> = g.atoms().iter().map(|a| a.element.symbol()).collect();
        assert_eq!(symbols, ["C", "C", "O"]);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Single));
        let h: Vec<_> = g.atoms().iter().map(Atom::total_h).collect();
        assert_eq!(h, [3, 2, 1]);
    }

    #[test]
    fn cyclopropane() {
        let g = parse_smiles("C1CC1").unwrap();
        assert_eq!(g.atom_count(), 3);
        assert_eq!(g.bond_count(), 3);
        assert_eq!(g.rings().len(), 1);
        assert_eq!(g.rings()[0].len(), 3);
    }

    #[test]
    fn benzene() {
        let g = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(g.atom_count(), 6);
        assert!(g.atoms().iter().all(|a| a.aromatic && a.element == Element::C));
        assert_eq!(g.bond_count(), 6);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
        assert!(g.atoms().iter().all(|a| a.total_h() == 1));
    }

    #[test]
    fn unclosed_ring() {
        let e = parse_smiles("C1CC").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnclosedRing(1));
        assert_eq!(e.offset, 1);
        assert!(e.to_string().contains("unclosed ring closure 1"));
    }

    #[test]
    fn malformed_inputs_name_offsets() {
        let cases: [(&str, usize); 8] = [
            ("C(C", 1),
            ("CC)", 2),
            ("C[NH3+", 1),
            ("CXC", 1),
            ("C(C)(C)(C)(C)C", 0),
            ("C=", 1),
            ("", 0),
            ("C$C", 1),
        ];
        for (smi, offset) in cases {
            let e = parse_smiles(smi).unwrap_err();
            assert_eq!(e.offset, offset, "{smi}: {e}");
        }
        assert!(matches!(
            parse_smiles("C(C)(C)(C)(C)C").unwrap_err().kind,
            ParseErrorKind::ValenceOverflow { .. }
        ));
        assert!(matches!(
            parse_smiles("[Xy]").unwrap_err().kind,
            ParseErrorKind::UnknownElement(_)
        ));
    }

    #[test]
    fn bracket_atoms() {
        let g = parse_smiles("[NH4+]").unwrap();
        let a = g.atom(0);
        assert_eq!(a.element, Element::N);
        assert_eq!(a.formal_charge, 1);
        assert_eq!(a.total_h(), 4);

        let g = parse_smiles("C[N+](=O)[O-]").unwrap();
        assert_eq!(g.atom(3).formal_charge, -1);
        assert_eq!(g.atom(2).total_h(), 0);

        let g = parse_smiles("[Fe++]").unwrap();
        assert_eq!(g.atom(0).formal_charge, 2);
        let g = parse_smiles("[Cu+2]").unwrap();
        assert_eq!(g.atom(0).formal_charge, 2);

        let g = parse_smiles("[nH]1cccc1").unwrap();
        assert!(g.atom(0).aromatic);
        assert_eq!(g.atom(0).total_h(), 1);

        let g = parse_smiles("[Sc]").unwrap();
        assert_eq!(g.atom(0).element.symbol(), "Sc");
        let g = parse_smiles("[se]1cccc1").unwrap();
        assert_eq!(g.atom(0).element.symbol(), "Se");
    }

    #[test]
    fn stereo_and_isotopes_are_ignored_with_warnings() {
        let (g, w) = parse_smiles_with_warnings("F/C=C/[13CH2][C@@H](O)N").unwrap();
        assert_eq!(g.atom_count(), 7);
        assert!(w.contains(&ParseWarning::IgnoredStereo { offset: 1 }));
        assert!(w.iter().any(|w| matches!(w, ParseWarning::IgnoredIsotope { .. })));
        assert_eq!(g.atom(3).total_h(), 2);
    }

    #[test]
    fn explicit_hydrogen_atoms_fold() {
        let g = parse_smiles("[H]C([H])([H])O").unwrap();
        assert_eq!(g.atom_count(), 2);
        assert_eq!(g.atom(0).total_h(), 3);
        let g = parse_smiles("[H][H]").unwrap();
        assert_eq!(g.atom_count(), 2);
    }

    #[test]
    fn ring_closure_variants() {
        let g = parse_smiles("C%10CC%10").unwrap();
        assert_eq!(g.rings().len(), 1);
        let g = parse_smiles("C=1CC1").unwrap();
        assert!(g.bonds().iter().any(|b| b.order == BondOrder::Double));
        assert_eq!(
            parse_smiles("C=1CC#1").unwrap_err().kind,
            ParseErrorKind::RingBondConflict(1)
        );
        assert_eq!(parse_smiles("C11").unwrap_err().kind, ParseErrorKind::DuplicateBond);
        // ring numbers can be reused after closing
        let g = parse_smiles("C1CC1C1CC1").unwrap();
        assert_eq!(g.rings().len(), 2);
    }

    #[test]
    fn aromatic_hydrogen_counts() {
        let g = parse_smiles("c1ccncc1").unwrap();
        assert_eq!(g.atom(3).total_h(), 0);
        let g = parse_smiles("c1ccoc1").unwrap();
        assert_eq!(g.atom(3).total_h(), 0);
        let g = parse_smiles("c1ccc2ccccc2c1").unwrap();
        assert_eq!(g.atom(4).total_h(), 1);
        assert_eq!(g.atom(3).total_h(), 0);
        let g = parse_smiles("O=c1cccc[nH]1").unwrap();
        assert_eq!(g.atom(1).total_h(), 0);
    }

    #[test]
    fn disconnected_fragments() {
        let g = parse_smiles("[Na+].[Cl-]").unwrap();
        assert_eq!(g.atom_count(), 2);
        assert_eq!(g.bond_count(), 0);
        assert_eq!(parse_smiles("C.C").unwrap().bond_count(), 0);
    }

    #[test]
    fn title_after_whitespace_is_ignored() {
        let g = parse_smiles("CCO ethanol").unwrap();
        assert_eq!(g.atom_count(), 3);
    }
}
