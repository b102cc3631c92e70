//! Permutation symmetry for tensor-power discrimination programs.
//!
//! The parallel channel program on `n` uses is invariant under simultaneous
//! permutation of the `n` input/output pairs, so its variables can be
//! restricted to the permutation-invariant subspace. That subspace has an
//! orthogonal basis indexed by group orbits of matrix-index pairs — one basis
//! element per multiset of per-position letters — whose count grows only
//! polynomially in `n`. This module enumerates the orbits, expands tensor
//! powers in the orbit basis, performs group averaging, and solves the
//! reduced program over orbit coefficients. Positivity is enforced by
//! reconstructing the full-space matrices from the coefficients, which keeps
//! the variable count polynomial while staying affordable at desk scale.

use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::hypothesis::{ChannelTestResult, SOLVER_BETA_FLOOR};
use crate::qlinalg::{
    permutation_matrix, Channel, ComplexMatrix, DensityMatrix,
};
use crate::sdp::{LinExpr, MatExpr, Model, SolverOptions};
use ndarray::Array2;
use num_complex::Complex64;
use std::collections::HashMap;

/// A pair of length-`n` index vectors, addressing one matrix entry of an
/// operator on `n` copies: row word `i`, column word `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndexPair {
    pub i: Vec<usize>,
    pub j: Vec<usize>,
}

impl MultiIndexPair {
    /// Per-position letters `(i_k, j_k)`.
    pub fn letters(&self) -> Vec<(usize, usize)> {
        self.i.iter().zip(self.j.iter()).map(|(&a, &b)| (a, b)).collect()
    }
}

/// One orbit of index pairs under the simultaneous permutation action.
#[derive(Clone, Debug)]
pub struct Orbit {
    /// Canonical representative: the lexicographically smallest letter sequence.
    pub representative: MultiIndexPair,
    /// Number of index pairs in the orbit (a multinomial coefficient).
    pub size: usize,
}

/// Orbit basis of the permutation-invariant operators on `n` copies of a
/// `d`-dimensional system.
#[derive(Clone, Debug)]
pub struct OrbitBasis {
    d: usize,
    n: usize,
    orbits: Vec<Orbit>,
    lookup: HashMap<Vec<usize>, usize>,
}

/// Cap on the number of orbits an enumeration may produce.
pub const ORBIT_COUNT_CAP: usize = 1_000_000;

/// Cap on the full-space dimension `d^n` for dense reconstruction.
pub const DENSE_DIM_CAP: usize = 4096;

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        acc = acc * (n - t) / (t + 1);
    }
    acc
}

/// Multinomial `n! / Π_ℓ K_ℓ!` of the letter multiplicities of a representative.
pub fn orbit_size(rep: &MultiIndexPair) -> usize {
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    for letter in rep.letters() {
        *counts.entry(letter).or_insert(0) += 1;
    }
    let n = rep.i.len();
    let mut num: u128 = 1;
    for t in 1..=n {
        num *= t as u128;
    }
    for count in counts.values() {
        for t in 1..=*count {
            num /= t as u128;
        }
    }
    num as usize
}

/// Enumerates all orbits for local dimension `d` and `n` copies.
///
/// Orbits are in bijection with multisets of `n` letters from the `d²`-letter
/// alphabet of single-system index pairs, so the count is `C(d²+n-1, n)`.
pub fn orbit_enumerate(d: usize, n: usize) -> Result<OrbitBasis> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidArgument("orbit enumeration needs d ≥ 1, n ≥ 1".into()));
    }
    let alphabet = d * d;
    let expected = binomial((alphabet + n - 1) as u128, n as u128);
    if expected > ORBIT_COUNT_CAP as u128 {
        return Err(Error::ResourceCap(format!(
            "orbit count C({}, {n}) = {expected} exceeds {ORBIT_COUNT_CAP}",
            alphabet + n - 1
        )));
    }
    let mut orbits = Vec::with_capacity(expected as usize);
    let mut lookup = HashMap::with_capacity(expected as usize);
    let mut codes = vec![0usize; n];
    // Generate nondecreasing code sequences (the canonical representatives).
    loop {
        let rep = MultiIndexPair {
            i: codes.iter().map(|c| c / d).collect(),
            j: codes.iter().map(|c| c % d).collect(),
        };
        let size = orbit_size(&rep);
        lookup.insert(codes.clone(), orbits.len());
        orbits.push(Orbit { representative: rep, size });
        // Advance to the next nondecreasing sequence.
        let mut k = n;
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            if codes[k] + 1 < alphabet {
                let v = codes[k] + 1;
                for slot in codes.iter_mut().skip(k) {
                    *slot = v;
                }
                break;
            }
            if k == 0 {
                codes.clear();
                break;
            }
        }
        if codes.is_empty() {
            break;
        }
    }
    debug_assert_eq!(orbits.len() as u128, expected);
    Ok(OrbitBasis { d, n, orbits, lookup })
}

impl OrbitBasis {
    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn copies(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn orbit(&self, r: usize) -> &Orbit {
        &self.orbits[r]
    }

    pub fn orbits(&self) -> &[Orbit] {
        &self.orbits
    }

    /// Full-space dimension `d^n`.
    pub fn full_dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    /// The sorted letter-code signature of an index pair.
    pub fn signature(&self, i: &[usize], j: &[usize]) -> Vec<usize> {
        let mut codes: Vec<usize> =
            i.iter().zip(j.iter()).map(|(&a, &b)| a * self.d + b).collect();
        codes.sort_unstable();
        codes
    }

    /// Orbit id containing the index pair `(i, j)`.
    pub fn orbit_of(&self, i: &[usize], j: &[usize]) -> Result<usize> {
        self.lookup.get(&self.signature(i, j)).copied().ok_or_else(|| {
            Error::InvalidArgument("index pair outside the enumerated alphabet".into())
        })
    }

    fn orbit_of_signature(&self, signature: &[usize]) -> usize {
        self.lookup[signature]
    }

    /// Orbit id of the adjoint: every letter `(x, y)` flipped to `(y, x)`.
    pub fn transpose_orbit(&self, r: usize) -> usize {
        let rep = &self.orbits[r].representative;
        self.orbit_of_signature(&self.signature(&rep.j, &rep.i))
    }

    /// Whether every letter of the representative is diagonal (`i_k = j_k`).
    pub fn is_diagonal(&self, r: usize) -> bool {
        let rep = &self.orbits[r].representative;
        rep.i == rep.j
    }

    /// Dense basis element `C_r`: 1 on every index pair of the orbit.
    pub fn orbit_matrix(&self, r: usize) -> Result<ComplexMatrix> {
        let dim = self.full_dim();
        if dim > DENSE_DIM_CAP {
            return Err(Error::ResourceCap(format!(
                "dense orbit matrix of dimension {dim} exceeds {DENSE_DIM_CAP}"
            )));
        }
        let mut out = Array2::<Complex64>::zeros((dim, dim));
        let rep = &self.orbits[r].representative;
        let mut letters = rep.letters();
        letters.sort_unstable();
        for arrangement in distinct_arrangements(&letters) {
            let mut row = 0usize;
            let mut col = 0usize;
            for &(x, y) in &arrangement {
                row = row * self.d + x;
                col = col * self.d + y;
            }
            out[(row, col)] = Complex64::ONE;
        }
        ComplexMatrix::new(out)
    }
}

/// All distinct permutations of a sorted letter multiset.
fn distinct_arrangements(sorted: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    let mut uniq: Vec<(usize, usize)> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for &l in sorted {
        if uniq.last() == Some(&l) {
            *counts.last_mut().unwrap() += 1;
        } else {
            uniq.push(l);
            counts.push(1);
        }
    }
    let n = sorted.len();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(
        uniq: &[(usize, usize)],
        counts: &mut [usize],
        cur: &mut Vec<(usize, usize)>,
        n: usize,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for k in 0..uniq.len() {
            if counts[k] > 0 {
                counts[k] -= 1;
                cur.push(uniq[k]);
                rec(uniq, counts, cur, n, out);
                cur.pop();
                counts[k] += 1;
            }
        }
    }
    rec(&uniq, &mut counts, &mut cur, n, &mut out);
    out
}

/// Coefficients `γ_r = Π_k A[i_k, j_k]` expanding `A^{⊗n} = Σ_r γ_r C_r`.
pub fn tensor_power_coeffs(a: &ComplexMatrix, basis: &OrbitBasis) -> Result<Vec<Complex64>> {
    if a.dim() != basis.d {
        return Err(Error::DimMismatch(format!(
            "operator dimension {} does not match basis local dimension {}",
            a.dim(),
            basis.d
        )));
    }
    Ok(basis
        .orbits
        .iter()
        .map(|o| {
            o.representative
                .letters()
                .into_iter()
                .map(|(x, y)| a.at(x, y))
                .product()
        })
        .collect())
}

/// Group average `X̄ = (1/n!) Σ_π P(π) X P(π)†` over simultaneous permutations.
///
/// Computed orbit-wise (every entry becomes the mean of its orbit), which
/// avoids enumerating the `n!` permutations.
pub fn group_average(x: &ComplexMatrix, d: usize, n: usize) -> Result<ComplexMatrix> {
    let dim = d
        .checked_pow(n as u32)
        .filter(|&v| v <= DENSE_DIM_CAP)
        .ok_or_else(|| Error::ResourceCap(format!("group average dimension d^n exceeds {DENSE_DIM_CAP}")))?;
    if x.dim() != dim {
        return Err(Error::DimMismatch(format!(
            "operator dimension {} is not {d}^{n}",
            x.dim()
        )));
    }
    let digits = |mut v: usize| -> Vec<usize> {
        let mut out = vec![0usize; n];
        for k in (0..n).rev() {
            out[k] = v % d;
            v /= d;
        }
        out
    };
    let signature_at = |row: usize, col: usize| -> Vec<usize> {
        let iw = digits(row);
        let jw = digits(col);
        let mut codes: Vec<usize> = (0..n).map(|k| iw[k] * d + jw[k]).collect();
        codes.sort_unstable();
        codes
    };
    let mut sums: HashMap<Vec<usize>, (Complex64, usize)> = HashMap::new();
    for row in 0..dim {
        for col in 0..dim {
            let entry = sums.entry(signature_at(row, col)).or_insert((Complex64::ZERO, 0));
            entry.0 += x.at(row, col);
            entry.1 += 1;
        }
    }
    let mut out = Array2::<Complex64>::zeros((dim, dim));
    for row in 0..dim {
        for col in 0..dim {
            let (total, count) = sums[&signature_at(row, col)];
            out[(row, col)] = total / count as f64;
        }
    }
    ComplexMatrix::new(out)
}

/// The data of the reduced parallel discrimination program.
#[derive(Clone, Debug)]
pub struct ReducedProblem {
    /// Orbit basis on the joint input/output system (interleaved coordinates).
    pub rb_basis: OrbitBasis,
    /// Orbit basis on the input system alone.
    pub r_basis: OrbitBasis,
    /// Tensor-power coefficients of the first channel's Choi operator.
    pub gamma_e: Vec<Complex64>,
    /// Tensor-power coefficients of the second channel's Choi operator.
    pub gamma_f: Vec<Complex64>,
    /// For each input orbit `t`, the joint orbits making up `C_t ⊗ 1` — those
    /// with position-wise diagonal output letters and input marginal `t`.
    pub embed: Vec<Vec<usize>>,
    dim_in: usize,
    dim_out: usize,
}

/// Assembles orbit bases, tensor-power coefficients, and the `C_t ⊗ 1`
/// embedding map for a channel pair and `n` uses.
pub fn reduced_problem(e: &Channel, f: &Channel, n: usize) -> Result<ReducedProblem> {
    if e.dim_in() != f.dim_in() || e.dim_out() != f.dim_out() {
        return Err(Error::DimMismatch("reduced_problem with mismatched channels".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("reduced_problem needs n >= 1".into()));
    }
    let di = e.dim_in();
    let dout = e.dim_out();
    let q = di * dout;
    let rb_basis = orbit_enumerate(q, n)?;
    let r_basis = orbit_enumerate(di, n)?;
    let gamma_e = tensor_power_coeffs(e.choi().matrix(), &rb_basis)?;
    let gamma_f = tensor_power_coeffs(f.choi().matrix(), &rb_basis)?;

    let mut embed: Vec<Vec<usize>> = vec![Vec::new(); r_basis.len()];
    for (r, orbit) in rb_basis.orbits.iter().enumerate() {
        let rep = &orbit.representative;
        // Joint row letter v = i·d_out + a, column letter w = j·d_out + b.
        let diagonal_output = rep
            .i
            .iter()
            .zip(rep.j.iter())
            .all(|(&v, &w)| v % dout == w % dout);
        if !diagonal_output {
            continue;
        }
        let ri: Vec<usize> = rep.i.iter().map(|&v| v / dout).collect();
        let rj: Vec<usize> = rep.j.iter().map(|&w| w / dout).collect();
        let t = r_basis.orbit_of(&ri, &rj)?;
        embed[t].push(r);
    }
    Ok(ReducedProblem { rb_basis, r_basis, gamma_e, gamma_f, embed, dim_in: di, dim_out: dout })
}

/// Hermiticity-paired real variables for a set of orbit coefficients.
struct PairedVars {
    /// Per orbit: (real-part variable, optional imaginary-part variable,
    /// whether this orbit is the canonical member of its transpose pair).
    entries: Vec<(usize, Option<usize>, bool)>,
}

fn add_paired_vars(model: &mut Model, basis: &OrbitBasis, real: bool) -> PairedVars {
    let mut entries: Vec<(usize, Option<usize>, bool)> = vec![(usize::MAX, None, false); basis.len()];
    for r in 0..basis.len() {
        let rt = basis.transpose_orbit(r);
        if rt == r {
            let u = model.add_vars(1).start;
            entries[r] = (u, None, true);
        } else if r < rt {
            let u = model.add_vars(1).start;
            let w = if real { None } else { Some(model.add_vars(1).start) };
            entries[r] = (u, w, true);
            entries[rt] = (u, w, false);
        }
    }
    PairedVars { entries }
}

impl PairedVars {
    /// Real-linear coefficients of `Σ_r y_r* γ_r |O_r|` on this pairing:
    /// `2|O|Re γ` on the real part and `2|O|Im γ` on the imaginary part for a
    /// transpose pair, `|O| γ` (real) on a self-transposed orbit.
    fn inner_product_expr(&self, basis: &OrbitBasis, gamma: &[Complex64]) -> LinExpr {
        let mut out = LinExpr::zero();
        for (r, &(u, w, canonical)) in self.entries.iter().enumerate() {
            if !canonical {
                continue;
            }
            let size = basis.orbit(r).size as f64;
            let g = gamma[r];
            if basis.transpose_orbit(r) == r {
                out.add_term(u, size * g.re);
            } else {
                out.add_term(u, 2.0 * size * g.re);
                if let Some(w) = w {
                    out.add_term(w, 2.0 * size * g.im);
                }
            }
        }
        out
    }

    /// The reconstructed full-space operator as a matrix expression.
    fn matrix_expr(&self, basis: &OrbitBasis) -> Result<MatExpr> {
        let dim = basis.full_dim();
        let mut expr = MatExpr::zero(dim);
        for (r, &(u, w, canonical)) in self.entries.iter().enumerate() {
            if !canonical {
                continue;
            }
            let c_r = basis.orbit_matrix(r)?;
            let rt = basis.transpose_orbit(r);
            if rt == r {
                expr.add_term(u, &c_r, 1.0);
            } else {
                let c_rt = basis.orbit_matrix(rt)?;
                expr.add_term(u, &c_r.add(&c_rt), 1.0);
                if let Some(w) = w {
                    // i C_r - i C_rᵀ is Hermitian.
                    let im_basis = c_r.scale(Complex64::I).add(&c_rt.scale(-Complex64::I));
                    expr.add_term(w, &im_basis, 1.0);
                }
            }
        }
        Ok(expr)
    }

}

/// Solves the parallel discrimination program in the orbit-coefficient basis.
///
/// Variables are the Hermiticity-paired orbit coefficients of the strategy
/// operator and the input marginal; the objective and the success constraint
/// use the orthogonality relation `Tr(C_r† C_s) = δ_rs |O_r|`, the input
/// normalization sums `|O_t|` over diagonal input orbits, and positivity of
/// the three operator constraints is enforced on their full-space
/// reconstructions. The optimum agrees with [`crate::hypothesis::channel_dh_parallel`];
/// only the parameterization differs.
pub fn reduced_channel_dh(
    e: &Channel,
    f: &Channel,
    n: usize,
    eps: f64,
    opts: &SolverOptions,
) -> Result<ChannelTestResult> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "reduced_channel_dh needs ε in [0,1), got {eps}"
        )));
    }
    let rp = reduced_problem(e, f, n)?;
    let dd = rp.rb_basis.full_dim();
    if dd > DENSE_DIM_CAP {
        return Err(Error::ResourceCap(format!(
            "full-space reconstruction dimension {dd} exceeds {DENSE_DIM_CAP}"
        )));
    }
    let real = e.choi().matrix().is_real() && f.choi().matrix().is_real();

    let mut model = Model::new();
    let y = add_paired_vars(&mut model, &rp.rb_basis, real);
    let z = add_paired_vars(&mut model, &rp.r_basis, real);

    let omega_expr = y.matrix_expr(&rp.rb_basis)?;
    let rho_expr = z.matrix_expr(&rp.r_basis)?;

    // Ω ⪰ 0 and ρ ⪰ 0.
    model.add_psd(omega_expr.clone());
    model.add_psd(rho_expr.clone());

    // ρ ⊗ 1 - Ω ⪰ 0, with C_t ⊗ 1 expanded through the embedding map.
    let mut gap = MatExpr::zero(dd);
    for (t, &(u, w, canonical)) in z.entries.iter().enumerate() {
        if !canonical {
            continue;
        }
        let tt = rp.r_basis.transpose_orbit(t);
        let mut lift = ComplexMatrix::zeros(dd, dd);
        for &r in &rp.embed[t] {
            lift = lift.add(&rp.rb_basis.orbit_matrix(r)?);
        }
        if tt == t {
            gap.add_term(u, &lift, 1.0);
        } else {
            let mut lift_t = ComplexMatrix::zeros(dd, dd);
            for &r in &rp.embed[tt] {
                lift_t = lift_t.add(&rp.rb_basis.orbit_matrix(r)?);
            }
            gap.add_term(u, &lift.add(&lift_t), 1.0);
            if let Some(w) = w {
                let im_basis = lift.scale(Complex64::I).add(&lift_t.scale(-Complex64::I));
                gap.add_term(w, &im_basis, 1.0);
            }
        }
    }
    gap.add_expr(&omega_expr, -1.0);
    model.add_psd(gap);

    // Tr ρ = Σ over diagonal input orbits of z_t |O_t| = 1.
    let mut trace_expr = LinExpr::zero();
    for (t, &(u, _, canonical)) in z.entries.iter().enumerate() {
        if canonical && rp.r_basis.is_diagonal(t) {
            trace_expr.add_term(u, rp.r_basis.orbit(t).size as f64);
        }
    }
    model.add_eq(trace_expr, 1.0);

    model.add_ge(y.inner_product_expr(&rp.rb_basis, &rp.gamma_e), 1.0 - eps);
    model.minimize(y.inner_product_expr(&rp.rb_basis, &rp.gamma_f));

    let sol = model.solve(opts)?;
    if !sol.status.is_optimal() {
        return Err(Error::Solver {
            status: format!("{:?}", sol.status),
            context: "reduced_channel_dh SDP".into(),
        });
    }

    // Reconstruct, then report in collected [R^n, B^n] coordinates like the
    // direct program.
    let omega_inter = omega_expr.eval(&sol.x);
    let rho_mat = rho_expr.eval(&sol.x);
    let ge = crate::qlinalg::tensor_power(e.choi().matrix(), n);
    let gf = crate::qlinalg::tensor_power(f.choi().matrix(), n);
    let alpha = (1.0 - omega_inter.mul(&ge).trace().re).clamp(0.0, 1.0);
    let beta = omega_inter.mul(&gf).trace().re.max(0.0);
    let omega = if n == 1 {
        omega_inter
    } else {
        let dims: Vec<usize> =
            (0..2 * n).map(|k| if k % 2 == 0 { rp.dim_in } else { rp.dim_out }).collect();
        let perm: Vec<usize> = (0..n).map(|j| 2 * j).chain((0..n).map(|j| 2 * j + 1)).collect();
        let p = permutation_matrix(&dims, &perm)?;
        p.mul(&omega_inter).mul(&p.dagger())
    };
    let dh = if beta <= SOLVER_BETA_FLOOR {
        ExtendedReal::PosInf
    } else {
        ExtendedReal::Finite(-beta.log2())
    };
    Ok(ChannelTestResult {
        omega,
        input_marginal: DensityMatrix::sanitize(&rho_mat)?,
        alpha,
        beta,
        dh,
    })
}
