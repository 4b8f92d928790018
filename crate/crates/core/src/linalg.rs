//! Small dense complex linear algebra on top of `nalgebra`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
pub use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Eigenvalue floor used for square roots, pseudo-inverses and supports.
pub const EIG_FLOOR: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn kron_all<'a, I: IntoIterator<Item = &'a CMat>>(mats: I) -> CMat {
    let mut acc = CMat::from_element(1, 1, cr(1.0));
    for m in mats {
        acc = kron(&acc, m);
    }
    acc
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Maximum entry-wise deviation from Hermiticity.
pub fn hermiticity_error(m: &CMat) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = hermitian_part(m);
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), h);
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

pub fn max_abs_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigen(m).0.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn spectral_map(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(m);
    let n = m.nrows();
    let mut out = CMat::zeros(n, n);
    for (k, &v) in vals.iter().enumerate() {
        let fv = f(v);
        if fv == 0.0 {
            continue;
        }
        let col = vecs.column(k);
        out += (&col * col.adjoint()).scale(fv);
    }
    out
}

/// Square root of a positive semidefinite matrix; negative noise is clipped.
pub fn psd_sqrt(m: &CMat) -> CMat {
    spectral_map(m, |v| if v > EIG_FLOOR { libm::sqrt(v) } else { 0.0 })
}

/// Pseudo-inverse square root `M^(-1/2)` on the support of `m`.
pub fn psd_pinv_sqrt(m: &CMat) -> CMat {
    spectral_map(m, |v| if v > EIG_FLOOR { 1.0 / libm::sqrt(v) } else { 0.0 })
}

/// Orthogonal projector onto the eigenvectors with eigenvalue above `cutoff`.
pub fn support_projector(m: &CMat, cutoff: f64) -> CMat {
    spectral_map(m, |v| if v > cutoff { 1.0 } else { 0.0 })
}

/// Thin singular value decomposition `m = u · diag(s) · v_t`, singular values
/// descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub singular_values: Vec<f64>,
    pub v_t: CMat,
}

const JACOBI_SWEEPS: usize = 80;

/// One-sided Jacobi SVD.
///
/// nalgebra's bidiagonal SVD occasionally returns singular vectors that do not
/// recompose the input for rank-deficient complex matrices, so every caller
/// in this crate goes through this routine instead.
pub fn svd(m: &CMat) -> Svd {
    if m.nrows() < m.ncols() {
        let t = svd(&m.adjoint());
        return Svd { u: t.v_t.adjoint(), singular_values: t.singular_values, v_t: t.u.adjoint() };
    }
    let (rows, n) = m.shape();
    let mut a = m.clone();
    let mut v = CMat::identity(n, n);
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = Complex64::new(0.0, 0.0);
                for i in 0..rows {
                    alpha += a[(i, p)].norm_sqr();
                    beta += a[(i, q)].norm_sqr();
                    gamma += a[(i, p)].conj() * a[(i, q)];
                }
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                // rotate column q so that the overlap is real and positive
                let ph = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta >= 0.0 { 1.0 } else { -1.0 } / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for mat in [&mut a, &mut v] {
                    for i in 0..mat.nrows() {
                        let x = mat[(i, p)];
                        let y = mat[(i, q)] * ph;
                        mat[(i, p)] = x * c - y * s;
                        mat[(i, q)] = x * s + y * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|k| libm::sqrt(a.column(k).iter().map(|z| z.norm_sqr()).sum())).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let top = norms.iter().copied().fold(0.0, f64::max);
    let mut u = CMat::zeros(rows, n);
    let mut v_sorted = CMat::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        singular_values.push(s);
        v_sorted.set_column(dst, &v.column(src));
        if s > f64::EPSILON * top && s > 0.0 {
            u.set_column(dst, &a.column(src).unscale(s));
        } else {
            missing.push(dst);
        }
    }
    // orthonormal completion for null directions
    let mut basis = 0;
    for dst in missing {
        while basis < rows {
            let mut col = CVec::zeros(rows);
            col[basis] = Complex64::new(1.0, 0.0);
            basis += 1;
            for _ in 0..2 {
                for k in 0..n {
                    if k == dst {
                        continue;
                    }
                    let uk = u.column(k);
                    let proj = uk.dotc(&col);
                    col -= uk * proj;
                }
            }
            let nrm = col.norm();
            if nrm > 1e-6 {
                u.set_column(dst, &col.unscale(nrm));
                break;
            }
        }
    }
    Svd { u, singular_values, v_t: v_sorted.adjoint() }
}

pub fn frobenius(m: &CMat) -> f64 {
    libm::sqrt(m.iter().map(|z| z.norm_sqr()).sum())
}

pub fn trace_re(m: &CMat) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|k| m[(k, k)].re).sum()
}

/// `tr(a b)` without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// Column-major-free helper: builds a vector from interleaved `[re, im, re, im, ...]`.
pub fn from_interleaved(data: &[f64]) -> Option<Vec<Complex64>> {
    if data.len() % 2 != 0 {
        return None;
    }
    Some(data.chunks_exact(2).map(|p| c(p[0], p[1])).collect())
}

pub fn to_interleaved(data: &[Complex64]) -> Vec<f64> {
    data.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Row-major complex square matrix from interleaved data.
pub fn square_from_interleaved(data: &[f64]) -> Option<CMat> {
    let v = from_interleaved(data)?;
    let n = isqrt(v.len())?;
    Some(CMat::from_row_slice(n, n, &v))
}

pub fn square_to_interleaved(m: &CMat) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)].re);
            out.push(m[(i, j)].im);
        }
    }
    out
}

fn isqrt(n: usize) -> Option<usize> {
    let r = libm::round(libm::sqrt(n as f64)) as usize;
    (r * r == n).then_some(r)
}

/// Mixed-radix digits of `index`, most significant first.
pub fn digits(mut index: usize, radices: &[usize], out: &mut [usize]) {
    for k in (0..radices.len()).rev() {
        out[k] = index % radices[k];
        index /= radices[k];
    }
}

pub fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Applies `op` to the middle factor of a vector laid out as `pre ⊗ d ⊗ post`.
pub fn apply_block(op: &CMat, v: &[Complex64], pre: usize, d: usize, post: usize) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let mut out = alloc::vec![zero; v.len()];
    for p in 0..pre {
        let base = p * d * post;
        for a in 0..d {
            for b in 0..d {
                let m = op[(a, b)];
                if m == zero {
                    continue;
                }
                let src = base + b * post;
                let dst = base + a * post;
                for s in 0..post {
                    out[dst + s] += m * v[src + s];
                }
            }
        }
    }
    out
}

/// Reorders the tensor factors of a square operator: factor `k` of the
/// result is factor `perm[k]` of the input.
pub fn permute_operator(op: &CMat, dims: &[usize], perm: &[usize]) -> CMat {
    let n = op.nrows();
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let map = permutation_map(dims, &new_dims, perm);
    let mut out = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = op[(map[i], map[j])];
        }
    }
    out
}

/// For each index of the permuted layout, the index in the original layout.
pub fn permutation_map(dims: &[usize], new_dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let n = product(dims);
    let k = dims.len();
    let mut strides = alloc::vec![1usize; k];
    for a in (0..k.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    let mut dig = alloc::vec![0usize; k];
    (0..n)
        .map(|idx| {
            digits(idx, new_dims, &mut dig);
            dig.iter().zip(perm).map(|(&d, &p)| d * strides[p]).sum()
        })
        .collect()
}
