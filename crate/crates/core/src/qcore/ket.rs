use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{re, Real, Tolerances};

use super::{check_qubit, qubit_count};

/// Normalized pure state on `n >= 1` qubits. Qubit 0 is the leftmost tensor
/// factor, i.e. the most significant bit of the basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket<T> {
    amplitudes: Vec<Complex<T>>,
    n_qubits: usize,
}

impl<T: Real> Ket<T> {
    /// Validating constructor: the amplitudes must already have unit norm.
    pub fn new(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        Self::new_with(amplitudes, &Tolerances::default())
    }

    pub fn new_with(amplitudes: Vec<Complex<T>>, tol: &Tolerances<T>) -> Result<Self> {
        let n_qubits = qubit_count(amplitudes.len())?;
        let norm = norm_of(&amplitudes);
        if (norm - T::one()).abs() > tol.norm {
            return Err(Error::NotNormalized(norm.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self {
            amplitudes,
            n_qubits,
        })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let n_qubits = qubit_count(amplitudes.len())?;
        let norm = norm_of(&amplitudes);
        if norm <= T::min_positive_value() {
            return Err(Error::ZeroVector);
        }
        let inv = re(T::one() / norm);
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|a| a * inv).collect(),
            n_qubits,
        })
    }

    /// Computational basis state `|index⟩` on `n_qubits`.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        assert!(n_qubits >= 1 && index < (1 << n_qubits));
        let mut amplitudes = vec![Complex::zero(); 1 << n_qubits];
        amplitudes[index] = re(T::one());
        Self {
            amplitudes,
            n_qubits,
        }
    }

    pub fn zero() -> Self {
        Self::basis(1, 0)
    }

    pub fn one() -> Self {
        Self::basis(1, 1)
    }

    pub fn plus() -> Self {
        let h = re(T::FRAC_1_SQRT_2());
        Self {
            amplitudes: vec![h, h],
            n_qubits: 1,
        }
    }

    pub fn minus() -> Self {
        let h = re(T::FRAC_1_SQRT_2());
        Self {
            amplitudes: vec![h, -h],
            n_qubits: 1,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex<T> {
        self.amplitudes[index]
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        assert_eq!(self.dim(), other.dim(), "inner product of unequal dimensions");
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * *b)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| *a * *b))
            .collect();
        Self {
            amplitudes,
            n_qubits: self.n_qubits + other.n_qubits,
        }
    }

    /// Multiplies by a global phase `e^{iγ}`.
    pub fn with_phase(&self, gamma: T) -> Self {
        let ph = Complex::from_polar(T::one(), gamma);
        Self {
            amplitudes: self.amplitudes.iter().map(|a| *a * ph).collect(),
            n_qubits: self.n_qubits,
        }
    }

    /// `1 - |⟨self|other⟩|`: zero iff equal up to global phase.
    pub fn phase_insensitive_distance(&self, other: &Self) -> T {
        T::one() - self.inner(other).norm()
    }

    /// Elementwise distance after removing the best global phase.
    pub fn distance_up_to_phase(&self, other: &Self) -> T {
        let ov = self.inner(other);
        let ph = if ov.norm() > T::zero() {
            ov / re(ov.norm())
        } else {
            re(T::one())
        };
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(T::zero(), |m, (a, b)| m.max((*a * ph - *b).norm()))
    }

    /// Contracts qubit `qubit` with `⟨onto|`, returning the unnormalized
    /// amplitudes on the remaining qubits.
    pub(crate) fn contract_raw(&self, qubit: usize, onto: &Ket<T>) -> Result<Vec<Complex<T>>> {
        check_qubit(qubit, self.n_qubits)?;
        if onto.n_qubits != 1 {
            return Err(Error::Dimension {
                expected: 2,
                found: onto.dim(),
            });
        }
        if self.n_qubits == 1 {
            return Ok(vec![onto.inner(self)]);
        }
        let shift = self.n_qubits - 1 - qubit;
        let low_mask = (1usize << shift) - 1;
        let mut out = vec![Complex::zero(); self.dim() / 2];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let bit = (i >> shift) & 1;
            let reduced = ((i >> (shift + 1)) << shift) | (i & low_mask);
            out[reduced] = out[reduced] + onto.amplitudes[bit].conj() * *a;
        }
        Ok(out)
    }

    /// State of the remaining qubits after contracting `qubit` with `⟨onto|`,
    /// renormalized. Fails when the component is below the floor.
    pub fn contract(&self, qubit: usize, onto: &Ket<T>, tol: &Tolerances<T>) -> Result<(Ket<T>, T)> {
        if self.n_qubits < 2 {
            return Err(Error::InvalidArgument(
                "cannot contract the only qubit of a state".into(),
            ));
        }
        let raw = self.contract_raw(qubit, onto)?;
        let p = raw.iter().map(|a| a.norm_sqr()).sum::<T>();
        if p < tol.post_selection_floor {
            return Err(Error::PostSelectionFailed(p.to_f64().unwrap_or(0.0)));
        }
        Ok((Ket::normalized(raw)?, p))
    }

    pub fn cast<U: Real>(&self) -> Ket<U> {
        Ket {
            amplitudes: self
                .amplitudes
                .iter()
                .map(|a| Complex::new(U::lit(a.re.to_f64().unwrap()), U::lit(a.im.to_f64().unwrap())))
                .collect(),
            n_qubits: self.n_qubits,
        }
    }
}

fn norm_of<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt()
}
