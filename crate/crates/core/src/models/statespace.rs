//! Bijections between model states and matrix indices.
//!
//! Enumeration orders are fixed so emitted matrices are byte-stable:
//! one-species models by count; SIR by descending `S`, then ascending `I`;
//! SEIRS by descending `S`, then ascending `E`, then ascending `I`; the birth
//! space by ascending infection count, then ascending recovery count, with
//! the coffin last.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    ImmDeath,
    Moran,
    Sir,
    Seirs,
    SirBirth,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::ImmDeath => "imm-death",
            ModelKind::Moran => "moran",
            ModelKind::Sir => "sir",
            ModelKind::Seirs => "seirs",
            ModelKind::SirBirth => "sir-birth",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    /// `X ∈ 0..=n`.
    Line { n: u32 },
    /// `S + I ≤ n`.
    Triangle { n: u32 },
    /// `S + E + I ≤ n`.
    Tetrahedron { n: u32 },
    /// `(a, r) ∈ 0..=n_i × 0..=n_r`, plus a coffin.
    Box { n_i: u32, n_r: u32 },
}

/// Maps states to indices `0..dim()` and back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpaceMap {
    kind: ModelKind,
    shape: Shape,
}

fn tri(m: u64) -> u64 {
    m * (m + 1) / 2
}

fn tet(m: u64) -> u64 {
    m * (m + 1) * (m + 2) / 6
}

impl StateSpaceMap {
    pub fn imm_death(n: u32) -> Self {
        StateSpaceMap {
            kind: ModelKind::ImmDeath,
            shape: Shape::Line { n },
        }
    }

    pub fn moran(n_pop: u32) -> Self {
        StateSpaceMap {
            kind: ModelKind::Moran,
            shape: Shape::Line { n: n_pop },
        }
    }

    pub fn sir(n_pop: u32) -> Self {
        StateSpaceMap {
            kind: ModelKind::Sir,
            shape: Shape::Triangle { n: n_pop },
        }
    }

    pub fn seirs(n_pop: u32) -> Self {
        StateSpaceMap {
            kind: ModelKind::Seirs,
            shape: Shape::Tetrahedron { n: n_pop },
        }
    }

    /// Infection counts `0..=n_i` by recovery counts `0..=n_r`, plus a coffin.
    pub fn sir_birth(n_i: u32, n_r: u32) -> Self {
        StateSpaceMap {
            kind: ModelKind::SirBirth,
            shape: Shape::Box { n_i, n_r },
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Number of states, coffin included.
    pub fn dim(&self) -> usize {
        let d = match self.shape {
            Shape::Line { n } => n as u64 + 1,
            Shape::Triangle { n } => tri(n as u64 + 1),
            Shape::Tetrahedron { n } => tet(n as u64 + 1),
            Shape::Box { n_i, n_r } => (n_i as u64 + 1) * (n_r as u64 + 1) + 1,
        };
        d as usize
    }

    pub fn coffin(&self) -> Option<usize> {
        matches!(self.shape, Shape::Box { .. }).then(|| self.dim() - 1)
    }

    /// Column names for [`state_of`](Self::state_of) tuples.
    pub fn labels(&self) -> &'static [&'static str] {
        match self.kind {
            ModelKind::ImmDeath | ModelKind::Moran => &["X"],
            ModelKind::Sir => &["S", "I"],
            ModelKind::Seirs => &["S", "E", "I"],
            ModelKind::SirBirth => &["n_I", "n_R"],
        }
    }

    /// Index of a state tuple, or `None` when it is not in the space.
    pub fn index_of(&self, state: &[u32]) -> Option<usize> {
        let idx = match (self.shape, state) {
            (Shape::Line { n }, &[x]) if x <= n => x as u64,
            (Shape::Triangle { n }, &[s, i]) if s <= n && i <= n - s => {
                tri((n - s) as u64) + i as u64
            }
            (Shape::Tetrahedron { n }, &[s, e, i]) if s <= n && e <= n - s && i <= n - s - e => {
                let m = (n - s) as u64;
                let e = e as u64;
                tet(m) + e * (m + 1) - e * e.saturating_sub(1) / 2 + i as u64
            }
            (Shape::Box { n_i, n_r }, &[a, r]) if a <= n_i && r <= n_r => {
                a as u64 * (n_r as u64 + 1) + r as u64
            }
            _ => return None,
        };
        Some(idx as usize)
    }

    /// State tuple at `index`; `None` for the coffin or out of range.
    pub fn state_of(&self, index: usize) -> Option<Vec<u32>> {
        if index >= self.dim() || Some(index) == self.coffin() {
            return None;
        }
        let k = index as u64;
        let state = match self.shape {
            Shape::Line { .. } => vec![k as u32],
            Shape::Triangle { n } => {
                let m = (0..=n as u64)
                    .take_while(|&m| tri(m) <= k)
                    .last()
                    .unwrap_or(0);
                vec![n - m as u32, (k - tri(m)) as u32]
            }
            Shape::Tetrahedron { n } => {
                let m = (0..=n as u64)
                    .take_while(|&m| tet(m) <= k)
                    .last()
                    .unwrap_or(0);
                let mut rest = k - tet(m);
                let mut e = 0;
                while rest > m - e {
                    rest -= m - e + 1;
                    e += 1;
                }
                vec![n - m as u32, e as u32, rest as u32]
            }
            Shape::Box { n_r, .. } => {
                let w = n_r as u64 + 1;
                vec![(k / w) as u32, (k % w) as u32]
            }
        };
        Some(state)
    }

    /// All states in index order (the coffin is skipped).
    pub fn states(&self) -> impl Iterator<Item = (usize, Vec<u32>)> + '_ {
        (0..self.dim()).filter_map(move |k| self.state_of(k).map(|s| (k, s)))
    }
}
