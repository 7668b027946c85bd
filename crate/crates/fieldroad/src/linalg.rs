//! General banded LU factorization with partial pivoting, in the classic
//! column-major band layout: entry (i, j) of an n x n matrix with kl
//! subdiagonals and ku superdiagonals is stored at
//! ab[j * ldab + kl + ku + i - j], with ldab = 2 kl + ku + 1 so row
//! interchanges have kl rows of fill space above the band. Factorization
//! cost is O(n kl (kl + ku)), which for the mesh Jacobians here (bandwidth
//! ny + 1 after column-wise reordering) beats dense elimination by three
//! orders of magnitude.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    ldab: usize,
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        assert!(n > 0);
        let ldab = 2 * kl + ku + 1;
        Self { n, kl, ku, ldab, ab: vec![0.0; ldab * n] }
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        j * self.ldab + (self.kl + self.ku + i) - j
    }

    /// Stores entry (i, j); panics outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.n && j < self.n, "entry ({i}, {j}) out of range");
        assert!(
            i + self.ku >= j && j + self.kl >= i,
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let o = self.offset(i, j);
        self.ab[o] = value;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + self.ku >= j && j + self.kl >= i {
            self.ab[self.offset(i, j)]
        } else {
            0.0
        }
    }

    /// LU factorization with partial pivoting. Consumes the matrix; errors on
    /// an exactly zero pivot (structurally or numerically singular input).
    pub fn factor(mut self) -> Result<BandLu> {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku;
        let ab = &mut self.ab;
        let mut ipiv = Vec::with_capacity(n);
        let mut ju = 0usize;

        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab + kv;
            let mut jp = 0usize;
            let mut pmax = ab[col].abs();
            for p in 1..=km {
                let a = ab[col + p].abs();
                if a > pmax {
                    pmax = a;
                    jp = p;
                }
            }
            ipiv.push(j + jp);
            if !(pmax > 0.0) {
                return Err(Error::Linear(format!(
                    "singular matrix: no usable pivot in column {j}"
                )));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                // Swap rows j and j + jp across the affected columns.
                for c in j..=ju {
                    let o = c * ldab + (kv + j) - c;
                    ab.swap(o, o + jp);
                }
            }
            if km > 0 {
                let inv = 1.0 / ab[col];
                for p in 1..=km {
                    ab[col + p] *= inv;
                }
                // Rank-1 update of the trailing block, column by column; the
                // slices are exact-length so the inner loop vectorizes.
                for c in (j + 1)..=ju {
                    let urow = c * ldab + (kv + j) - c;
                    let ujc = ab[urow];
                    if ujc != 0.0 {
                        let (head, tail) = ab.split_at_mut(urow + 1);
                        let mult = &head[col + 1..col + 1 + km];
                        let tgt = &mut tail[..km];
                        for p in 0..km {
                            tgt[p] -= mult[p] * ujc;
                        }
                    }
                }
            }
        }
        Ok(BandLu { n, kl, ku, ldab, ab: self.ab, ipiv })
    }
}

/// Factored form; solves overwrite the right-hand side.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n, "right-hand side length mismatch");
        let (n, kl, ldab) = (self.n, self.kl, self.ldab);
        let kv = self.kl + self.ku;
        // Forward substitution with the unit-lower factor, applying the row
        // interchanges as recorded.
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let col = j * ldab + kv;
            let bj = b[j];
            if bj != 0.0 {
                for q in 1..=km {
                    b[j + q] -= self.ab[col + q] * bj;
                }
            }
        }
        // Back substitution with the upper factor (bandwidth kl + ku).
        for j in (0..n).rev() {
            let col = j * ldab + kv;
            let x = b[j] / self.ab[col];
            b[j] = x;
            if x != 0.0 {
                let lm = kv.min(j);
                for p in 1..=lm {
                    b[j - p] -= self.ab[col - p] * x;
                }
            }
        }
    }
}
