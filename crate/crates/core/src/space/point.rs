use std::cmp::Ordering;
use std::fmt;

/// A reduced word in a free group.
///
/// Letters are nonzero integers: generator `g` is `g`, its inverse is `-g`.
/// Words are kept reduced (no adjacent `g, -g`). Ordering is shortlex with
/// letters ordered `a < A < b < B < ...`, which is the canonical point order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<i8>);

fn letter_key(l: i8) -> u16 {
    2 * (l.unsigned_abs() as u16 - 1) + u16::from(l < 0)
}

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    /// Builds a word from letters, reducing it.
    pub fn from_letters(letters: &[i8]) -> Self {
        let mut w = Word::identity();
        for &l in letters {
            w.push(l);
        }
        w
    }

    pub fn letters(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<i8> {
        self.0.last().copied()
    }

    /// Right multiplication by one letter, with cancellation.
    pub fn push(&mut self, l: i8) {
        debug_assert!(l != 0);
        if self.0.last() == Some(&-l) {
            self.0.pop();
        } else {
            self.0.push(l);
        }
    }

    pub fn times(&self, l: i8) -> Word {
        let mut w = self.clone();
        w.push(l);
        w
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| -l).collect())
    }

    pub fn mul(&self, other: &Word) -> Word {
        let mut w = self.clone();
        for &l in &other.0 {
            w.push(l);
        }
        w
    }

    /// Length of the reduced form of `self⁻¹ · other`.
    pub fn distance(&self, other: &Word) -> u64 {
        let common = self
            .0
            .iter()
            .zip(&other.0)
            .take_while(|(a, b)| a == b)
            .count();
        (self.0.len() + other.0.len() - 2 * common) as u64
    }

    /// Parses `"aBb"`-style text: lowercase letters are generators, uppercase their inverses.
    pub fn parse(text: &str, rank: u8) -> Option<Word> {
        let mut letters = Vec::with_capacity(text.len());
        for c in text.chars() {
            let (g, sign) = if c.is_ascii_lowercase() {
                (c as u8 - b'a' + 1, 1)
            } else if c.is_ascii_uppercase() {
                (c as u8 - b'A' + 1, -1)
            } else {
                return None;
            };
            if g > rank {
                return None;
            }
            letters.push(sign * g as i8);
        }
        let w = Word(letters.clone());
        // only already-reduced text is a canonical encoding
        if Word::from_letters(&letters) != w {
            return None;
        }
        Some(w)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.0 {
            let base = if l > 0 { b'a' } else { b'A' };
            write!(f, "{}", (base + l.unsigned_abs() - 1) as char)?;
        }
        Ok(())
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| {
            self.0
                .iter()
                .map(|&l| letter_key(l))
                .cmp(other.0.iter().map(|&l| letter_key(l)))
        })
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical identifier of a point of some space.
///
/// The variant is determined by the space kind; points of one space always
/// share a variant, so the derived order is a total order per space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointId {
    /// Integer lattice point.
    Grid(Vec<i64>),
    /// Free group element.
    Word(Word),
    /// Tree vertex or custom-table index.
    Vertex(u64),
    /// Point on the integer line.
    Coord(i64),
    /// `(block index, point inside the block)`.
    Block(usize, Box<PointId>),
    /// `(base point, level in 1..=n)`.
    Level(Box<PointId>, u32),
}

impl PointId {
    pub fn grid(coords: &[i64]) -> Self {
        PointId::Grid(coords.to_vec())
    }

    pub fn word(letters: &[i8]) -> Self {
        PointId::Word(Word::from_letters(letters))
    }

    pub fn as_word(&self) -> Option<&Word> {
        match self {
            PointId::Word(w) => Some(w),
            _ => None,
        }
    }

    pub fn as_grid(&self) -> Option<&[i64]> {
        match self {
            PointId::Grid(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointId::Grid(c) => {
                write!(f, "(")?;
                for (i, x) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            PointId::Word(w) if w.is_empty() => write!(f, "e"),
            PointId::Word(w) => write!(f, "{w}"),
            PointId::Vertex(v) => write!(f, "v{v}"),
            PointId::Coord(x) => write!(f, "{x}"),
            PointId::Block(b, p) => write!(f, "[{b}:{p}]"),
            PointId::Level(p, n) => write!(f, "{p}@{n}"),
        }
    }
}
