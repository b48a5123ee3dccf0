//! Sign patterns on sideband subspaces seen from the carrier manifold.
//!
//! A pattern of `±I` on sideband subspaces `1..=n+1` multiplies each state
//! `|0,j⟩` and `|1,j−1⟩` by the sign `s_j`, with `s_0 = +1` for `|0,0⟩`.
//! Carrier block `i` then sees `diag(s_i, s_{i+1})`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CarrierSign {
    /// `diag(1, −1)`
    Z,
    /// `diag(−1, 1)`
    MinusZ,
    /// `diag(1, 1)`
    I,
    /// `diag(−1, −1)`
    MinusI,
}

impl CarrierSign {
    pub const ALL: [CarrierSign; 4] = [Self::Z, Self::MinusZ, Self::I, Self::MinusI];

    fn diagonal(&self) -> (i8, i8) {
        match self {
            Self::Z => (1, -1),
            Self::MinusZ => (-1, 1),
            Self::I => (1, 1),
            Self::MinusI => (-1, -1),
        }
    }

    fn from_diagonal(a: i8, b: i8) -> Self {
        match (a, b) {
            (1, -1) => Self::Z,
            (-1, 1) => Self::MinusZ,
            (1, 1) => Self::I,
            _ => Self::MinusI,
        }
    }
}

/// Signs `s_1..=s_{n+1}` of the sideband subspaces realizing `target` on
/// carrier blocks `0..=n`.
pub fn sqm_sign_pattern_for_cqm(target: &[CarrierSign]) -> Result<Vec<i8>> {
    let mut prev: i8 = 1;
    let mut out = Vec::with_capacity(target.len());
    for (i, t) in target.iter().enumerate() {
        let (a, b) = t.diagonal();
        if a != prev {
            return Err(Error::InconsistentPattern { position: i });
        }
        out.push(b);
        prev = b;
    }
    Ok(out)
}

/// Carrier view of the sideband signs `s_1..=s_{n+1}`.
pub fn cqm_pattern_of_signs(signs: &[i8]) -> Vec<CarrierSign> {
    let mut prev = 1;
    signs
        .iter()
        .map(|&s| {
            let c = CarrierSign::from_diagonal(prev, s);
            prev = s;
            c
        })
        .collect()
}

/// Signs for `Z̃` on every carrier block except `Ĩ` (up to sign) on block `k`.
pub fn eq22_signs(n: usize, k: usize) -> Vec<i8> {
    let mut prev: i8 = 1;
    (0..=n)
        .map(|i| {
            prev = if i == k { prev } else { -prev };
            prev
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use CarrierSign::*;

    #[test]
    fn figure_example() {
        let signs = sqm_sign_pattern_for_cqm(&[Z, MinusZ, Z, MinusZ]).unwrap();
        assert_eq!(signs, vec![-1, 1, -1, 1]);
        assert_eq!(cqm_pattern_of_signs(&[-1, 1, -1, 1]), vec![Z, MinusZ, Z, MinusZ]);
    }

    #[test]
    fn all_identity() {
        assert_eq!(sqm_sign_pattern_for_cqm(&[I; 5]).unwrap(), vec![1; 5]);
    }

    #[test]
    fn conflict_position_reported() {
        assert_eq!(sqm_sign_pattern_for_cqm(&[Z, I]), Err(Error::InconsistentPattern { position: 1 }));
        assert_eq!(sqm_sign_pattern_for_cqm(&[MinusI]), Err(Error::InconsistentPattern { position: 0 }));
    }

    #[test]
    fn eq22_pattern_shape() {
        for n in 1..6 {
            for k in 0..=n {
                let c = cqm_pattern_of_signs(&eq22_signs(n, k));
                assert_eq!(c.len(), n + 1);
                for (i, s) in c.iter().enumerate() {
                    if i == k {
                        assert!(matches!(s, I | MinusI));
                    } else {
                        assert!(matches!(s, Z | MinusZ));
                    }
                }
            }
        }
    }

    #[test]
    fn exhaustive_roundtrip() {
        for n in 0..=4usize {
            let len = n + 1;
            let mut consistent = 0;
            for code in 0..4usize.pow(len as u32) {
                let target: Vec<CarrierSign> = (0..len).map(|i| CarrierSign::ALL[(code >> (2 * i)) & 3]).collect();
                if let Ok(signs) = sqm_sign_pattern_for_cqm(&target) {
                    consistent += 1;
                    assert_eq!(cqm_pattern_of_signs(&signs), target);
                }
            }
            assert_eq!(consistent, 1 << len);
            for code in 0..(1usize << len) {
                let signs: Vec<i8> = (0..len).map(|i| if code >> i & 1 == 1 { -1 } else { 1 }).collect();
                assert_eq!(sqm_sign_pattern_for_cqm(&cqm_pattern_of_signs(&signs)).unwrap(), signs);
            }
        }
    }
}
