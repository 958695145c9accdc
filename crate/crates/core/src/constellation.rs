//! Symbol alphabets, complex/real translation and bit labelling.
//!
//! Complex-valued quantities are carried in the stacked real layout
//! `(Re(u_1..u_d), Im(u_1..u_d))`, and complex channels are widened to the
//! matching `2M × 2N` real block matrix.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{RealMatrix, RealVector};

/// Modulation family of an alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Modulation {
    /// Arbitrary finite set of real values.
    Real,
    /// Square QAM, `per_axis` levels on each of the in-phase and quadrature axes.
    Qam { per_axis: usize },
    /// Unit-modulus PSK with `order` points at angles `2πk/order`.
    Psk { order: usize },
}

impl Modulation {
    pub fn label(&self) -> String {
        match self {
            Modulation::Real => "real".to_string(),
            Modulation::Qam { per_axis } => format!("{}-QAM", per_axis * per_axis),
            Modulation::Psk { order } => format!("{order}-PSK"),
        }
    }
}

/// Shape of the convex hull used as the constraint set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HullShape {
    /// `[lo, hi]` on every coordinate.
    Box { lo: f64, hi: f64 },
    /// Regular octagon (vertices at angles `kπ/4`) on each `(x_n, x_{N+n})` pair.
    OctagonPerPair { circumradius: f64 },
}

/// Convex hull of `𝔄^N` in the real layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullDescriptor {
    pub shape: HullShape,
    pub dim: usize,
}

impl HullDescriptor {
    pub fn boxed(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid("box", format!("requires finite lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(HullDescriptor {
            shape: HullShape::Box { lo, hi },
            dim,
        })
    }

    pub fn octagon_per_pair(circumradius: f64, dim: usize) -> Result<Self> {
        if !(circumradius > 0.0) || !circumradius.is_finite() {
            return Err(Error::invalid("circumradius", "must be positive"));
        }
        if dim % 2 != 0 {
            return Err(Error::invalid("dim", "pairwise hull needs an even dimension"));
        }
        Ok(HullDescriptor {
            shape: HullShape::OctagonPerPair { circumradius },
            dim,
        })
    }
}

/// A dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        check_dim("complex matrix storage", rows * cols, data.len())?;
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_dim("complex matvec", self.cols, x.len())?;
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Left-multiplies by a real matrix: `R · self`.
    pub fn left_mul_real(&self, r: &RealMatrix) -> Result<ComplexMatrix> {
        check_dim("real-complex product", r.cols(), self.rows)?;
        let mut data = vec![Complex64::new(0.0, 0.0); r.rows() * self.cols];
        for i in 0..r.rows() {
            for k in 0..self.rows {
                let rik = r.get(i, k);
                if rik == 0.0 {
                    continue;
                }
                for j in 0..self.cols {
                    data[i * self.cols + j] += self.data[k * self.cols + j] * rik;
                }
            }
        }
        ComplexMatrix::new(r.rows(), self.cols, data)
    }
}

/// `(Re(u); Im(u))`.
pub fn complex_to_real_stack(u: &[Complex64]) -> RealVector {
    let mut out: Vec<f64> = u.iter().map(|z| z.re).collect();
    out.extend(u.iter().map(|z| z.im));
    RealVector::from_raw(out)
}

/// Inverse of [`complex_to_real_stack`].
pub fn real_stack_to_complex(u: &RealVector) -> Result<Vec<Complex64>> {
    if u.dim() % 2 != 0 {
        return Err(Error::invalid("stacked vector", "dimension must be even"));
    }
    let d = u.dim() / 2;
    Ok((0..d).map(|n| Complex64::new(u[n], u[d + n])).collect())
}

/// `[Re(A), −Im(A); Im(A), Re(A)]`, so that `widen(A)·stack(x) = stack(Ax)`.
pub fn widen_channel(a: &ComplexMatrix) -> RealMatrix {
    let (m, n) = (a.rows, a.cols);
    let mut out = RealMatrix::zeros(2 * m, 2 * n);
    for r in 0..m {
        for c in 0..n {
            let z = a.get(r, c);
            out.set(r, c, z.re);
            out.set(r, n + c, -z.im);
            out.set(m + r, c, z.im);
            out.set(m + r, n + c, z.re);
        }
    }
    out
}

/// A finite symbol alphabet `𝔄`.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    modulation: Modulation,
    points: Vec<Complex64>,
}

impl Alphabet {
    pub fn real(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("alphabet", "needs at least one point"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("alphabet", "points must be finite"));
        }
        let alphabet = Alphabet {
            modulation: Modulation::Real,
            points: points.into_iter().map(|p| Complex64::new(p, 0.0)).collect(),
        };
        if alphabet.len() > 1 && !(alphabet.d_min() > 0.0) {
            return Err(Error::invalid("alphabet", "points must be pairwise distinct"));
        }
        Ok(alphabet)
    }

    /// Square QAM with levels `{±1, ±3, …}` per axis; point `k` has
    /// in-phase level `k / per_axis` and quadrature level `k % per_axis`.
    pub fn qam(per_axis: usize) -> Result<Self> {
        if per_axis != 2 && per_axis != 4 {
            return Err(Error::Unsupported(format!(
                "QAM with {per_axis} levels per axis (supported: 4-QAM, 16-QAM)"
            )));
        }
        let levels = qam_levels(per_axis);
        let points = levels
            .iter()
            .flat_map(|&re| levels.iter().map(move |&im| Complex64::new(re, im)))
            .collect();
        Ok(Alphabet {
            modulation: Modulation::Qam { per_axis },
            points,
        })
    }

    pub fn psk(order: usize) -> Result<Self> {
        if order != 8 {
            return Err(Error::Unsupported(format!("{order}-PSK (supported: 8-PSK)")));
        }
        let points = (0..order)
            .map(|l| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * l as f64 / order as f64))
            .collect();
        Ok(Alphabet {
            modulation: Modulation::Psk { order },
            points,
        })
    }

    pub fn from_modulation(modulation: Modulation, real_points: Option<Vec<f64>>) -> Result<Self> {
        match modulation {
            Modulation::Real => Alphabet::real(
                real_points.ok_or_else(|| Error::invalid("alphabet", "real alphabets need explicit points"))?,
            ),
            Modulation::Qam { per_axis } => Alphabet::qam(per_axis),
            Modulation::Psk { order } => Alphabet::psk(order),
        }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_complex(&self) -> bool {
        self.modulation != Modulation::Real
    }

    /// Real dimension carrying `symbols` symbols.
    pub fn ambient_dim(&self, symbols: usize) -> usize {
        if self.is_complex() {
            2 * symbols
        } else {
            symbols
        }
    }

    /// Number of symbols carried by a real vector of dimension `dim`.
    pub fn symbol_count(&self, dim: usize) -> Result<usize> {
        if self.is_complex() {
            if dim % 2 != 0 {
                return Err(Error::invalid("layout", "complex alphabets need an even real dimension"));
            }
            Ok(dim / 2)
        } else {
            Ok(dim)
        }
    }

    /// Minimum pairwise distance, by exhaustive comparison.
    pub fn d_min(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.min((a - b).norm());
            }
        }
        best
    }

    /// Per-axis QAM levels, or the sorted real points.
    pub fn axis_levels(&self) -> Vec<f64> {
        match self.modulation {
            Modulation::Qam { per_axis } => qam_levels(per_axis),
            _ => {
                let mut v: Vec<f64> = self.points.iter().map(|p| p.re).collect();
                v.sort_by(f64::total_cmp);
                v
            }
        }
    }

    /// Mean symbol energy `E|a|²` under a uniform prior.
    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    pub fn hull(&self, symbols: usize) -> Result<HullDescriptor> {
        let dim = self.ambient_dim(symbols);
        match self.modulation {
            Modulation::Psk { .. } => HullDescriptor::octagon_per_pair(1.0, dim),
            _ => {
                let levels = self.axis_levels();
                HullDescriptor::boxed(levels[0], levels[levels.len() - 1], dim)
            }
        }
    }

    /// Real-layout vector of the symbols with the given indices.
    pub fn symbols_to_vector(&self, indices: &[usize]) -> Result<RealVector> {
        let mut symbols = Vec::with_capacity(indices.len());
        for &i in indices {
            symbols.push(*self.points.get(i).ok_or_else(|| invalid_index(i, self.len()))?);
        }
        Ok(if self.is_complex() {
            complex_to_real_stack(&symbols)
        } else {
            RealVector::from_raw(symbols.iter().map(|z| z.re).collect())
        })
    }

    pub fn bits_per_symbol(&self) -> usize {
        match self.modulation {
            Modulation::Qam { per_axis } => 2 * bit_width(per_axis),
            _ => bit_width(self.len()),
        }
    }
}

fn qam_levels(per_axis: usize) -> Vec<f64> {
    (0..per_axis).map(|i| 2.0 * i as f64 - (per_axis as f64 - 1.0)).collect()
}

fn bit_width(count: usize) -> usize {
    let mut bits = 0;
    while (1usize << bits) < count {
        bits += 1;
    }
    bits
}

fn invalid_index(index: usize, len: usize) -> Error {
    Error::invalid("symbol index", format!("{index} out of range for alphabet of size {len}"))
}

/// Index of the nearest value; ties go to the lowest index.
fn nearest_index(values: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, v) in values.iter().enumerate() {
        let d = (x - v).abs();
        if d < best_dist {
            best = i;
            best_dist = d;
        }
    }
    best
}

/// Nearest point of `𝔄^N` to `x` with the matching symbol indices.
///
/// Ties are broken toward the lowest alphabet index.
pub fn quantize_to_alphabet(x: &RealVector, alphabet: &Alphabet) -> Result<(RealVector, Vec<usize>)> {
    let n = alphabet.symbol_count(x.dim())?;
    let indices: Vec<usize> = match alphabet.modulation {
        Modulation::Real => {
            let values: Vec<f64> = alphabet.points.iter().map(|p| p.re).collect();
            x.iter().map(|&v| nearest_index(&values, v)).collect()
        }
        Modulation::Qam { per_axis } => {
            // the hull is a product of intervals, so the nearest point is per-axis
            let levels = qam_levels(per_axis);
            (0..n)
                .map(|k| nearest_index(&levels, x[k]) * per_axis + nearest_index(&levels, x[n + k]))
                .collect()
        }
        Modulation::Psk { .. } => (0..n)
            .map(|k| {
                let z = Complex64::new(x[k], x[n + k]);
                let mut best = 0;
                let mut best_dist = f64::INFINITY;
                for (i, p) in alphabet.points.iter().enumerate() {
                    let d = (z - p).norm_sqr();
                    if d < best_dist {
                        best = i;
                        best_dist = d;
                    }
                }
                best
            })
            .collect(),
    };
    Ok((alphabet.symbols_to_vector(&indices)?, indices))
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

fn push_bits(out: &mut Vec<u8>, value: usize, width: usize) {
    for b in (0..width).rev() {
        out.push(((value >> b) & 1) as u8);
    }
}

/// Gray-coded bit labels, most significant bit first.
///
/// QAM labels concatenate the Gray codes of the in-phase and quadrature level
/// indices; PSK and real alphabets Gray-code the point index (for real
/// alphabets, the rank of the point in ascending order).
pub fn symbols_to_bits(indices: &[usize], alphabet: &Alphabet) -> Result<Vec<u8>> {
    let mut bits = Vec::with_capacity(indices.len() * alphabet.bits_per_symbol());
    let ranks: Vec<usize> = match alphabet.modulation {
        Modulation::Real => {
            let mut order: Vec<usize> = (0..alphabet.len()).collect();
            order.sort_by(|&a, &b| alphabet.points[a].re.total_cmp(&alphabet.points[b].re));
            let mut ranks = vec![0; alphabet.len()];
            for (rank, &i) in order.iter().enumerate() {
                ranks[i] = rank;
            }
            ranks
        }
        _ => (0..alphabet.len()).collect(),
    };
    for &i in indices {
        if i >= alphabet.len() {
            return Err(invalid_index(i, alphabet.len()));
        }
        match alphabet.modulation {
            Modulation::Qam { per_axis } => {
                let w = bit_width(per_axis);
                push_bits(&mut bits, gray(i / per_axis), w);
                push_bits(&mut bits, gray(i % per_axis), w);
            }
            _ => push_bits(&mut bits, gray(ranks[i]), alphabet.bits_per_symbol()),
        }
    }
    Ok(bits)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlphabetRepr {
    modulation: Modulation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    points: Option<Vec<[f64; 2]>>,
}

impl Serialize for Alphabet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        AlphabetRepr {
            modulation: self.modulation,
            points: Some(self.points.iter().map(|p| [p.re, p.im]).collect()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Alphabet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = AlphabetRepr::deserialize(deserializer)?;
        let real_points = match (&repr.modulation, &repr.points) {
            (Modulation::Real, Some(points)) => {
                if points.iter().any(|p| p[1] != 0.0) {
                    return Err(D::Error::custom("real alphabet points must have zero imaginary part"));
                }
                Some(points.iter().map(|p| p[0]).collect())
            }
            _ => None,
        };
        let alphabet = Alphabet::from_modulation(repr.modulation, real_points).map_err(D::Error::custom)?;
        if let (true, Some(points)) = (alphabet.is_complex(), &repr.points) {
            let matches = points.len() == alphabet.len()
                && points
                    .iter()
                    .zip(alphabet.points())
                    .all(|(p, q)| (p[0] - q.re).abs() < 1e-9 && (p[1] - q.im).abs() < 1e-9);
            if !matches {
                return Err(D::Error::custom(format!(
                    "points do not match the canonical {} constellation",
                    alphabet.modulation.label()
                )));
            }
        }
        Ok(alphabet)
    }
}
