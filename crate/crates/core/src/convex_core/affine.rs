use crate::convex_core::linalg::Matrix;
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// `ψ(x) = γ·x + β`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineFunction<T> {
    pub slope: Vec<T>,
    pub offset: T,
}

impl<T: Scalar> AffineFunction<T> {
    pub fn new(slope: Vec<T>, offset: T) -> Self {
        Self { slope, offset }
    }

    #[inline]
    pub fn eval(&self, x: &[T]) -> T {
        self.slope.iter().zip(x).fold(self.offset, |acc, (&g, &xi)| acc + g * xi)
    }
}

/// Pointwise maximum of at most `budget` affine pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseAffineMax<T> {
    dim: usize,
    slopes: Vec<T>,
    offsets: Vec<T>,
    budget: usize,
}

impl<T: Scalar> PiecewiseAffineMax<T> {
    pub fn new(pieces: Vec<AffineFunction<T>>, budget: usize) -> Result<Self> {
        let dim = pieces
            .first()
            .map(|p| p.slope.len())
            .ok_or_else(|| Error::InvalidArgument("piecewise-affine maximum needs at least one piece".into()))?;
        if pieces.len() > budget {
            return Err(Error::InvalidArgument(format!(
                "{} pieces exceed the budget of {budget}",
                pieces.len()
            )));
        }
        if pieces.iter().any(|p| p.slope.len() != dim) {
            return Err(Error::InvalidArgument("pieces have mixed dimensions".into()));
        }
        let mut slopes = Vec::with_capacity(pieces.len() * dim);
        let mut offsets = Vec::with_capacity(pieces.len());
        for p in pieces {
            slopes.extend_from_slice(&p.slope);
            offsets.push(p.offset);
        }
        Ok(Self { dim, slopes, offsets, budget })
    }

    /// Piece list with the budget equal to its length.
    pub fn from_pieces(pieces: Vec<AffineFunction<T>>) -> Result<Self> {
        let m = pieces.len();
        Self::new(pieces, m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn piece(&self, j: usize) -> AffineFunction<T> {
        AffineFunction::new(self.slopes[j * self.dim..(j + 1) * self.dim].to_vec(), self.offsets[j])
    }

    pub fn pieces(&self) -> impl Iterator<Item = AffineFunction<T>> + '_ {
        (0..self.len()).map(move |j| self.piece(j))
    }

    #[inline]
    fn piece_value(&self, j: usize, x: &[T]) -> T {
        let s = &self.slopes[j * self.dim..(j + 1) * self.dim];
        s.iter().zip(x).fold(self.offsets[j], |acc, (&g, &xi)| acc + g * xi)
    }

    /// Maximum value and the smallest index attaining it.
    pub fn eval_argmax(&self, x: &[T]) -> (T, usize) {
        let mut best = self.piece_value(0, x);
        let mut arg = 0;
        for j in 1..self.len() {
            let v = self.piece_value(j, x);
            if v > best {
                best = v;
                arg = j;
            }
        }
        (best, arg)
    }

    #[inline]
    pub fn eval(&self, x: &[T]) -> T {
        if self.dim == 1 {
            let x0 = x[0];
            return self
                .slopes
                .iter()
                .zip(&self.offsets)
                .fold(T::neg_infinity(), |m, (&g, &b)| m.max(g * x0 + b));
        }
        self.eval_argmax(x).0
    }

    /// Appends a piece, growing the budget if needed.
    pub fn push(&mut self, piece: AffineFunction<T>) -> Result<()> {
        if piece.slope.len() != self.dim {
            return Err(Error::InvalidArgument("piece dimension mismatch".into()));
        }
        self.slopes.extend_from_slice(&piece.slope);
        self.offsets.push(piece.offset);
        self.budget = self.budget.max(self.len());
        Ok(())
    }

    /// `l + c`.
    pub fn shifted(&self, c: T) -> Self {
        let mut out = self.clone();
        out.offsets.iter_mut().for_each(|b| *b = *b + c);
        out
    }

    /// `x ↦ l(M x)`: every slope `γ` becomes `Mᵀγ`.
    pub fn compose_linear(&self, m: &Matrix<T>) -> Result<Self> {
        if m.dim() != self.dim {
            return Err(Error::InvalidArgument("matrix dimension differs from the envelope's".into()));
        }
        let mut out = self.clone();
        for (src, dst) in self.slopes.chunks_exact(self.dim).zip(out.slopes.chunks_exact_mut(self.dim)) {
            m.mul_vec_transposed(src, dst);
        }
        Ok(out)
    }

    /// Text record: one row per piece, `γ₁ … γₙ β`, 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for j in 0..self.len() {
            let p = self.piece(j);
            let row: Vec<String> = p
                .slope
                .iter()
                .chain(std::iter::once(&p.offset))
                .map(|v| format!("{:.16e}", v.to_f64().unwrap_or(f64::NAN)))
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut pieces = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<T> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map(lit)
                        .map_err(|e| Error::Parse(format!("line {}: `{tok}`: {e}", lineno + 1)))
                })
                .collect::<Result<_>>()?;
            if vals.len() < 2 {
                return Err(Error::Parse(format!("line {}: need slope entries and an offset", lineno + 1)));
            }
            let (slope, offset) = vals.split_at(vals.len() - 1);
            pieces.push(AffineFunction::new(slope.to_vec(), offset[0]));
        }
        Self::from_pieces(pieces)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_linear_evaluates_at_image() {
        let l = PiecewiseAffineMax::from_pieces(vec![
            AffineFunction::new(vec![1.0, -2.0], 0.5),
            AffineFunction::new(vec![0.3, 0.7], -1.0),
        ])
        .unwrap();
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![-0.5, 3.0]]).unwrap();
        let lt = l.compose_linear(&m).unwrap();
        for x in [[0.1f64, 0.2], [-1.0, 0.4], [2.0, -3.0]] {
            let mut y = [0.0f64; 2];
            m.mul_vec(&x, &mut y);
            assert!((lt.eval(&x) - l.eval(&y)).abs() < 1e-14);
        }
        assert!(l.compose_linear(&Matrix::identity(3)).is_err());
    }

    fn abs_like() -> PiecewiseAffineMax<f64> {
        PiecewiseAffineMax::from_pieces(vec![
            AffineFunction::new(vec![1.0], 0.0),
            AffineFunction::new(vec![-1.0], 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn eval_examples() {
        let l = abs_like();
        assert_eq!(l.eval(&[0.5]), 0.5);
        assert_eq!(l.eval_argmax(&[0.0]), (0.0, 0));
        let single = PiecewiseAffineMax::from_pieces(vec![AffineFunction::new(vec![2.0], -1.0)]).unwrap();
        assert_eq!(single.eval(&[0.25]), -0.5);
    }

    #[test]
    fn empty_and_over_budget_rejected() {
        assert!(PiecewiseAffineMax::<f64>::from_pieces(vec![]).is_err());
        let p = vec![AffineFunction::new(vec![1.0], 0.0), AffineFunction::new(vec![2.0], 0.0)];
        assert!(PiecewiseAffineMax::new(p, 1).is_err());
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let l = PiecewiseAffineMax::from_pieces(vec![
            AffineFunction::new(vec![0.1, 1.0 / 3.0], -2.0e-7),
            AffineFunction::new(vec![std::f64::consts::PI, -0.0], 5.0),
        ])
        .unwrap();
        let back = PiecewiseAffineMax::<f64>::from_text(&l.to_text()).unwrap();
        assert_eq!(back, l);
    }
}
