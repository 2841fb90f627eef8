use crate::linalg::{hermiticity_residual, psd_check, CMatrix};
use crate::scalar::{cr, Real};

use super::LindbladRateModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockTag {
    Diagonal(usize),
    Coupling { to: usize, from: usize },
}

impl std::fmt::Display for BlockTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlockTag::Diagonal(r) => write!(f, "a[{r}]"),
            BlockTag::Coupling { to, from } => write!(f, "a[{to}<-{from}]"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BlockReport<T> {
    pub tag: BlockTag,
    pub hermiticity_residual: T,
    pub hermitian: bool,
    /// Smallest eigenvalue of the Hermitian part of the block.
    pub min_eig: T,
    pub psd: bool,
}

#[derive(Clone, Debug)]
pub struct ValidationReport<T> {
    pub blocks: Vec<BlockReport<T>>,
    pub weight_sum: T,
    pub weights_nonnegative: bool,
    pub weights_normalized: bool,
    pub passed: bool,
}

impl<T: Real> ValidationReport<T> {
    pub fn failures(&self) -> impl Iterator<Item = &BlockReport<T>> {
        self.blocks.iter().filter(|b| !b.psd || !b.hermitian)
    }
}

impl<T: Real> std::fmt::Display for ValidationReport<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "weights: sum {} (normalized: {}, nonnegative: {})",
            self.weight_sum, self.weights_normalized, self.weights_nonnegative
        )?;
        for b in &self.blocks {
            writeln!(
                f,
                "{}: hermiticity residual {:.3e}, min eigenvalue {:.6e}, {}",
                b.tag,
                b.hermiticity_residual.to_f64_lossy(),
                b.min_eig.to_f64_lossy(),
                if b.hermitian && b.psd { "ok" } else { "FAIL" }
            )?;
        }
        write!(f, "verdict: {}", if self.passed { "pass" } else { "fail" })
    }
}

/// Complete-positivity report with PSD tolerance 1e−10.
pub fn validate_model<T: Real>(model: &LindbladRateModel<T>) -> ValidationReport<T> {
    validate_model_with_tol(model, T::tol(1e-10))
}

/// Every diagonal and coupling block must be Hermitian and positive
/// semidefinite in the basis indices; weights must be nonnegative and sum
/// to one within 1e−10.
pub fn validate_model_with_tol<T: Real>(
    model: &LindbladRateModel<T>,
    psd_tol: T,
) -> ValidationReport<T> {
    let k = model.channels();
    let mut blocks = Vec::with_capacity(k * k);
    for to in 0..k {
        for from in 0..k {
            let tag = if to == from {
                BlockTag::Diagonal(to)
            } else {
                BlockTag::Coupling { to, from }
            };
            blocks.push(block_report(tag, model.rate(to, from), psd_tol));
        }
    }
    let weight_sum = model.weights().iter().fold(T::zero(), |acc, &w| acc + w);
    let weights_nonnegative = model.weights().iter().all(|&w| w >= T::zero());
    let weights_normalized = (weight_sum - T::one()).abs() <= T::tol(1e-10);
    let passed =
        weights_nonnegative && weights_normalized && blocks.iter().all(|b| b.hermitian && b.psd);
    ValidationReport {
        blocks,
        weight_sum,
        weights_nonnegative,
        weights_normalized,
        passed,
    }
}

fn block_report<T: Real>(tag: BlockTag, a: &CMatrix<T>, psd_tol: T) -> BlockReport<T> {
    let residual = hermiticity_residual(a);
    let hermitian = residual <= T::tol(1e-10) * a.norm().max(T::one());
    let sym = (a + a.adjoint()) * cr(T::lit(0.5));
    let report = psd_check(&sym, psd_tol).expect("symmetrized block is Hermitian");
    BlockReport {
        tag,
        hermiticity_residual: residual,
        hermitian,
        min_eig: report.min_eig,
        psd: report.is_psd,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OperatorBasis;
    use crate::scalar::c;

    #[test]
    fn free_evolution_passes() {
        let model = LindbladRateModel::<f64>::builder(OperatorBasis::pauli(), 1)
            .build()
            .unwrap();
        assert!(validate_model(&model).passed);
    }

    #[test]
    fn negative_eigenvalue_reported() {
        let mut a = CMatrix::<f64>::zeros(4, 4);
        a[(1, 1)] = c(-1., 0.);
        a[(2, 2)] = c(0.5, 0.);
        let model = LindbladRateModel::builder(OperatorBasis::pauli(), 2)
            .weights(vec![0.5, 0.5])
            .coupling(1, 0, a)
            .build()
            .unwrap();
        let report = validate_model(&model);
        assert!(!report.passed);
        let bad: Vec<_> = report.failures().collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].tag, BlockTag::Coupling { to: 1, from: 0 });
        assert!((bad[0].min_eig + 1.0).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_weights_fail() {
        let model = LindbladRateModel::<f64>::builder(OperatorBasis::pauli(), 2)
            .weights(vec![0.5, 0.6])
            .build()
            .unwrap();
        let report = validate_model(&model);
        assert!(!report.weights_normalized);
        assert!(!report.passed);
    }

    #[test]
    fn non_hermitian_block_fails() {
        let mut a = CMatrix::<f64>::zeros(4, 4);
        a[(0, 1)] = c(1., 0.);
        let model = LindbladRateModel::builder(OperatorBasis::pauli(), 1)
            .diagonal(0, a)
            .build()
            .unwrap();
        let report = validate_model(&model);
        assert!(!report.blocks[0].hermitian);
        assert!(!report.passed);
    }
}
