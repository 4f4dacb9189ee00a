//! Multipartite layouts, regions, partial traces and embeddings.
//!
//! Site 0 is the leftmost Kronecker factor: a flat basis index is
//! `sum_k i_k * stride_k` with `stride_k` the product of the dimensions of
//! all sites after `k`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Largest total Hilbert-space dimension handled by the dense routines.
pub const MAX_TOTAL_DIM: usize = 64;

/// Ordered local dimensions of a finite lattice of sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertLayout {
    dims: Vec<usize>,
}

impl HilbertLayout {
    /// Layout whose sites all have dimension at least 2.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidArgument(format!(
                "local dimensions must be >= 2, got {dims:?}"
            )));
        }
        Self::with_trivial_sites(dims)
    }

    /// Like [`HilbertLayout::new`] but accepts one-dimensional placeholder sites.
    pub fn with_trivial_sites(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidArgument(
                "layout needs at least one site".into(),
            ));
        }
        if dims.len() > 64 {
            return Err(Error::InvalidArgument(
                "at most 64 sites are supported".into(),
            ));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidArgument("local dimension 0".into()));
        }
        let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        match total {
            Some(t) if t <= MAX_TOTAL_DIM => Ok(Self { dims }),
            _ => Err(Error::InvalidArgument(format!(
                "total dimension of {dims:?} exceeds {MAX_TOTAL_DIM}"
            ))),
        }
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn full_region(&self) -> Region {
        Region::full(self.n_sites())
    }

    pub fn check_region(&self, region: Region) -> Result<()> {
        if region.0 & !self.full_region().0 != 0 {
            return Err(Error::InvalidRegion(format!(
                "{region} is not inside a {}-site layout",
                self.n_sites()
            )));
        }
        Ok(())
    }

    /// Complement of `region` inside this layout.
    pub fn complement(&self, region: Region) -> Region {
        self.full_region().difference(region)
    }

    pub fn region_dim(&self, region: Region) -> usize {
        region.sites().iter().map(|&s| self.dims[s]).product()
    }

    /// Layout of the sites in `region`, in site order. The empty region maps to
    /// a single trivial site so that scalars still have a layout.
    pub fn sub_layout(&self, region: Region) -> HilbertLayout {
        let dims: Vec<usize> = region.sites().iter().map(|&s| self.dims[s]).collect();
        if dims.is_empty() {
            HilbertLayout { dims: vec![1] }
        } else {
            HilbertLayout { dims }
        }
    }

    fn strides(&self) -> Vec<usize> {
        let n = self.dims.len();
        let mut strides = vec![1; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    /// Flat offsets of every basis state of `region`, enumerated in the
    /// sub-layout's own ordering.
    pub(crate) fn offsets(&self, region: Region) -> Vec<usize> {
        let strides = self.strides();
        let mut offsets = vec![0usize];
        for s in region.sites() {
            let mut next = Vec::with_capacity(offsets.len() * self.dims[s]);
            for &o in &offsets {
                for i in 0..self.dims[s] {
                    next.push(o + i * strides[s]);
                }
            }
            offsets = next;
        }
        offsets
    }
}

/// A subset of sites, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Region(pub u64);

impl Region {
    pub fn empty() -> Self {
        Region(0)
    }

    pub fn site(i: usize) -> Self {
        assert!(i < 64, "site index {i} out of range");
        Region(1 << i)
    }

    pub fn from_sites(sites: &[usize]) -> Self {
        sites
            .iter()
            .fold(Region(0), |r, &s| r.union(Region::site(s)))
    }

    pub fn full(n_sites: usize) -> Self {
        if n_sites >= 64 {
            Region(u64::MAX)
        } else {
            Region((1u64 << n_sites) - 1)
        }
    }

    pub fn sites(self) -> Vec<usize> {
        (0..64).filter(|&i| self.0 >> i & 1 == 1).collect()
    }

    pub fn contains(self, site: usize) -> bool {
        site < 64 && self.0 >> site & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Region) -> Region {
        Region(self.0 | other.0)
    }

    pub fn intersection(self, other: Region) -> Region {
        Region(self.0 & other.0)
    }

    pub fn difference(self, other: Region) -> Region {
        Region(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: Region) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: Region) -> bool {
        self.0 & !other.0 == 0
    }

    /// Re-index `self` relative to `parent`: the k-th site of `parent` becomes site k.
    pub fn relative_to(self, parent: Region) -> Result<Region> {
        if !self.is_subset(parent) {
            return Err(Error::InvalidRegion(format!(
                "{self} is not inside {parent}"
            )));
        }
        let mut out = 0u64;
        for (k, s) in parent.sites().into_iter().enumerate() {
            if self.contains(s) {
                out |= 1 << k;
            }
        }
        Ok(Region(out))
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, s) in self.sites().into_iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

fn check_operator(m: &ComplexMatrix, layout: &HilbertLayout) -> Result<()> {
    let d = layout.total_dim();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, layout {:?} needs {d}x{d}",
            m.nrows(),
            m.ncols(),
            layout.dims()
        )));
    }
    Ok(())
}

/// Trace out the sites in `traced`; the result lives on the remaining sites in
/// site order.
pub fn partial_trace(
    m: &ComplexMatrix,
    layout: &HilbertLayout,
    traced: Region,
) -> Result<ComplexMatrix> {
    check_operator(m, layout)?;
    layout.check_region(traced)?;
    let kept = layout.complement(traced);
    let ok = layout.offsets(kept);
    let ot = layout.offsets(traced);
    let n = ok.len();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        ot.iter().map(|&k| m[(ok[i] + k, ok[j] + k)]).sum()
    }))
}

/// Reduced operator on `kept` (trace over everything else).
pub fn marginal(m: &ComplexMatrix, layout: &HilbertLayout, kept: Region) -> Result<ComplexMatrix> {
    layout.check_region(kept)?;
    partial_trace(m, layout, layout.complement(kept))
}

/// `op ⊗ 1` with `op` acting on `support` and the identity elsewhere.
pub fn embed(op: &ComplexMatrix, support: Region, layout: &HilbertLayout) -> Result<ComplexMatrix> {
    layout.check_region(support)?;
    check_operator(op, &layout.sub_layout(support))?;
    let os = layout.offsets(support);
    let oc = layout.offsets(layout.complement(support));
    let d = layout.total_dim();
    let mut out = ComplexMatrix::zeros(d, d);
    for (i, &oi) in os.iter().enumerate() {
        for (j, &oj) in os.iter().enumerate() {
            let v = op[(i, j)];
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &k in &oc {
                out[(oi + k, oj + k)] = v;
            }
        }
    }
    Ok(out)
}

/// Tensor product of `a` on `region_a` with `b` on the complement of `region_a`.
pub fn tensor_regions(
    a: &ComplexMatrix,
    region_a: Region,
    b: &ComplexMatrix,
    layout: &HilbertLayout,
) -> Result<ComplexMatrix> {
    layout.check_region(region_a)?;
    let region_b = layout.complement(region_a);
    check_operator(a, &layout.sub_layout(region_a))?;
    check_operator(b, &layout.sub_layout(region_b))?;
    let oa = layout.offsets(region_a);
    let ob = layout.offsets(region_b);
    let d = layout.total_dim();
    let mut out = ComplexMatrix::zeros(d, d);
    for (i, &oi) in oa.iter().enumerate() {
        for (j, &oj) in oa.iter().enumerate() {
            let av = a[(i, j)];
            for (k, &ok) in ob.iter().enumerate() {
                for (l, &ol) in ob.iter().enumerate() {
                    out[(oi + ok, oj + ol)] = av * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.trace()
}

/// Largest entrywise modulus, used for tolerance checks.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-1.0)]))
    }

    #[test]
    fn z_on_first_site_is_leftmost_factor() {
        let layout = HilbertLayout::qubits(2).unwrap();
        let z0 = embed(&pauli_z(), Region::site(0), &layout).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| z0[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
        let z1 = embed(&pauli_z(), Region::site(1), &layout).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| z1[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn trace_of_product_operator_factorizes() {
        let layout = HilbertLayout::new(vec![2, 3]).unwrap();
        let a = ComplexMatrix::from_fn(2, 2, |i, j| {
            Complex64::new((i + 2 * j) as f64, i as f64 - j as f64)
        });
        let b = ComplexMatrix::from_fn(3, 3, |i, j| Complex64::new(1.0 + (i * j) as f64, 0.5));
        let ab = kron(&a, &b);
        let pa = partial_trace(&ab, &layout, Region::site(1)).unwrap();
        let pb = partial_trace(&ab, &layout, Region::site(0)).unwrap();
        assert!(max_abs(&(pa - &a * b.trace())) < 1e-14);
        assert!(max_abs(&(pb - &b * a.trace())) < 1e-14);
    }

    #[test]
    fn non_contiguous_marginal_matches_explicit_permutation() {
        // A ⊗ B ⊗ C, keep sites {0, 2}: expect tr(B) · A ⊗ C.
        let layout = HilbertLayout::new(vec![2, 3, 2]).unwrap();
        let a = ComplexMatrix::from_fn(2, 2, |i, j| Complex64::new(1.0 + i as f64, j as f64));
        let b = ComplexMatrix::from_fn(3, 3, |i, j| Complex64::new((i + j) as f64, 0.0));
        let cm = ComplexMatrix::from_fn(2, 2, |i, j| Complex64::new(2.0 - j as f64, i as f64));
        let abc = kron(&kron(&a, &b), &cm);
        let m = marginal(&abc, &layout, Region::from_sites(&[0, 2])).unwrap();
        let expected = kron(&a, &cm) * b.trace();
        assert!(max_abs(&(m - expected)) < 1e-13);
    }

    #[test]
    fn tracing_everything_gives_the_trace() {
        let layout = HilbertLayout::qubits(2).unwrap();
        let m = ComplexMatrix::from_fn(4, 4, |i, j| Complex64::new((i * 4 + j) as f64, 0.0));
        let t = partial_trace(&m, &layout, layout.full_region()).unwrap();
        assert_eq!(t.shape(), (1, 1));
        assert_eq!(t[(0, 0)], m.trace());
        let all = partial_trace(&m, &layout, Region::empty()).unwrap();
        assert_eq!(all, m);
    }

    #[test]
    fn tensor_regions_matches_kron_for_contiguous_split() {
        let layout = HilbertLayout::new(vec![2, 2, 2]).unwrap();
        let a = ComplexMatrix::from_fn(2, 2, |i, j| Complex64::new(i as f64, 1.0 + j as f64));
        let b = ComplexMatrix::from_fn(4, 4, |i, j| Complex64::new((i + 3 * j) as f64, -1.0));
        let t = tensor_regions(&a, Region::site(0), &b, &layout).unwrap();
        assert!(max_abs(&(t - kron(&a, &b))) < 1e-15);
    }

    #[test]
    fn rejects_mismatched_shapes_and_regions() {
        let layout = HilbertLayout::qubits(2).unwrap();
        let m = ComplexMatrix::zeros(3, 3);
        assert!(matches!(
            partial_trace(&m, &layout, Region::site(0)),
            Err(Error::DimensionMismatch(_))
        ));
        let m = ComplexMatrix::zeros(4, 4);
        assert!(matches!(
            partial_trace(&m, &layout, Region::site(5)),
            Err(Error::InvalidRegion(_))
        ));
        assert!(HilbertLayout::new(vec![2, 1]).is_err());
        assert!(HilbertLayout::with_trivial_sites(vec![2, 1]).is_ok());
        assert!(HilbertLayout::new(vec![4, 4, 4, 2]).is_err());
    }

    #[test]
    fn relative_region_reindexes() {
        let parent = Region::from_sites(&[1, 3, 4]);
        let r = Region::from_sites(&[3, 4]).relative_to(parent).unwrap();
        assert_eq!(r, Region::from_sites(&[1, 2]));
        assert!(Region::site(0).relative_to(parent).is_err());
    }
}
