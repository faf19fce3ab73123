//! Dense matrices over truncated Laurent series.

use crate::coeffs::Ring;
use crate::error::{Error, Result};
use crate::series::{Exp, Series, Window};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Series>,
}

impl SMat {
    pub fn from_rows(rows: Vec<Vec<Series>>) -> Result<SMat> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::Malformed("ragged matrix".into()));
        }
        Ok(SMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn identity(ring: &Ring, window: &Window, n: usize) -> Result<SMat> {
        SMat::scalar(ring, window, n, 1)
    }

    pub fn scalar(ring: &Ring, window: &Window, n: usize, c: i64) -> Result<SMat> {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(if i == j { Series::constant(ring, window.clone(), c)? } else { Series::zero(ring, window.clone())? });
            }
        }
        Ok(SMat { rows: n, cols: n, data })
    }

    pub fn diag(entries: Vec<Series>) -> Result<SMat> {
        let n = entries.len();
        let ring = entries.first().ok_or_else(|| Error::Malformed("empty diagonal".into()))?.ring().clone();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(if i == j { entries[i].clone() } else { Series::zero(&ring, entries[i].window().clone())? });
            }
        }
        Ok(SMat { rows: n, cols: n, data })
    }

    pub fn get(&self, i: usize, j: usize) -> &Series {
        &self.data[i * self.cols + j]
    }

    pub fn ring(&self) -> &Ring {
        self.data[0].ring()
    }

    pub fn map(&self, f: impl Fn(&Series) -> Result<Series>) -> Result<SMat> {
        Ok(SMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect::<Result<_>>()? })
    }

    pub fn transpose(&self) -> SMat {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        SMat { rows: self.cols, cols: self.rows, data }
    }

    pub fn add(&self, other: &SMat) -> Result<SMat> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Malformed("shape mismatch".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;
        Ok(SMat { rows: self.rows, cols: self.cols, data })
    }

    pub fn mul(&self, other: &SMat) -> Result<SMat> {
        if self.cols != other.rows {
            return Err(Error::Malformed("shape mismatch".into()));
        }
        let mut data = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc: Option<Series> = None;
                for k in 0..self.cols {
                    let t = self.get(i, k).mul(other.get(k, j))?;
                    acc = Some(match acc {
                        None => t,
                        Some(a) => a.add(&t)?,
                    });
                }
                data.push(acc.ok_or_else(|| Error::Malformed("empty product".into()))?);
            }
        }
        Ok(SMat { rows: self.rows, cols: other.cols, data })
    }

    pub fn mul_vec(&self, v: &[Series]) -> Result<Vec<Series>> {
        let col = SMat { rows: v.len(), cols: 1, data: v.to_vec() };
        Ok(self.mul(&col)?.data)
    }

    pub fn kron(&self, other: &SMat) -> Result<SMat> {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let a = self.get(i / other.rows, j / other.cols);
                let b = other.get(i % other.rows, j % other.cols);
                data.push(a.mul(b)?);
            }
        }
        Ok(SMat { rows, cols, data })
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> SMat {
        let mut data = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != skip_row && j != skip_col {
                    data.push(self.get(i, j).clone());
                }
            }
        }
        SMat { rows: self.rows - 1, cols: self.cols - 1, data }
    }

    /// Determinant by Laplace expansion along the first row.
    pub fn det(&self) -> Result<Series> {
        if self.rows != self.cols {
            return Err(Error::Malformed("determinant of a non-square matrix".into()));
        }
        match self.rows {
            0 => Err(Error::Malformed("empty matrix".into())),
            1 => Ok(self.data[0].clone()),
            2 => self.get(0, 0).mul(self.get(1, 1))?.sub(&self.get(0, 1).mul(self.get(1, 0))?),
            n => {
                let mut acc: Option<Series> = None;
                for j in 0..n {
                    let t = self.get(0, j).mul(&self.minor(0, j).det()?)?;
                    let t = if j % 2 == 1 { t.neg() } else { t };
                    acc = Some(match acc {
                        None => t,
                        Some(a) => a.add(&t)?,
                    });
                }
                Ok(acc.unwrap())
            }
        }
    }

    pub fn adjugate(&self) -> Result<SMat> {
        let n = self.rows;
        if n == 1 {
            // The window must admit exponent 0 even when the entry's lower bound is positive.
            let w = self.get(0, 0).window();
            let w = Window::new(w.lo.iter().map(|&l| l.min(0)).collect(), w.hi.clone())?;
            return SMat::identity(self.ring(), &w, 1);
        }
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let m = self.minor(j, i).det()?;
                data.push(if (i + j) % 2 == 1 { m.neg() } else { m });
            }
        }
        Ok(SMat { rows: n, cols: n, data })
    }

    /// Inverse as adjugate over determinant; fails when the determinant is not a unit.
    pub fn inverse(&self) -> Result<SMat> {
        let d = self.det()?.invert()?;
        self.adjugate()?.map(|x| x.mul(&d))
    }

    /// Entrywise equality on common windows.
    pub fn agrees_with(&self, other: &SMat) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| a.agrees_with(b))
    }

    /// First entry and exponent where the matrices differ.
    pub fn first_difference(&self, other: &SMat) -> Option<(usize, usize, Exp)> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if let Some(e) = self.get(i, j).first_difference(other.get(i, j)) {
                    return Some((i, j, e));
                }
            }
        }
        None
    }

    pub fn is_identity(&self) -> bool {
        let n = self.rows;
        let one = self.ring().one();
        let zero_exp = vec![0; self.ring().nvars()];
        (0..n).all(|i| {
            (0..n).all(|j| {
                let s = self.get(i, j);
                if i == j {
                    s.nterms() == 1 && s.coeff(&zero_exp) == one
                } else {
                    s.is_zero()
                }
            })
        })
    }
}
