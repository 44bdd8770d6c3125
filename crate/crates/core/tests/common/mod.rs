//! Reference implementations written independently of the library: plain
//! index loops and nalgebra eigensolvers only.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type M = DMatrix<Complex64>;

pub fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `tr_A` of a `(da·db)²` matrix, B index fastest.
pub fn trace_out_a(m: &M, da: usize, db: usize) -> M {
    let mut out = M::zeros(db, db);
    for b1 in 0..db {
        for b2 in 0..db {
            for a in 0..da {
                out[(b1, b2)] += m[(a * db + b1, a * db + b2)];
            }
        }
    }
    out
}

pub fn trace_out_b(m: &M, da: usize, db: usize) -> M {
    let mut out = M::zeros(da, da);
    for a1 in 0..da {
        for a2 in 0..da {
            for b in 0..db {
                out[(a1, a2)] += m[(a1 * db + b, a2 * db + b)];
            }
        }
    }
    out
}

pub fn eigenvalues(m: &M) -> Vec<f64> {
    let h = (m + m.adjoint()) * cx(0.5, 0.0);
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Entropy in bits of a positive operator with trace `t`, as `−Σ λ log₂ λ`.
pub fn entropy(m: &M) -> f64 {
    eigenvalues(m).into_iter().filter(|&x| x > 1e-14).map(|x| -x * x.log2()).sum()
}

pub fn mutual_information(m: &M, da: usize, db: usize) -> f64 {
    entropy(&trace_out_b(m, da, db)) + entropy(&trace_out_a(m, da, db)) - entropy(m)
}

/// `(𝟙 ± n·σ)/2` for a unit Bloch vector.
fn bloch_projectors(n: [f64; 3]) -> [M; 2] {
    let (x, y, z) = (n[0], n[1], n[2]);
    let p = |s: f64| M::from_row_slice(2, 2, &[cx(0.5 * (1.0 + s * z), 0.0), cx(0.5 * s * x, -0.5 * s * y), cx(0.5 * s * x, 0.5 * s * y), cx(0.5 * (1.0 - s * z), 0.0)]);
    [p(1.0), p(-1.0)]
}

/// Classical correlation at a qubit measurement along `n`, from explicit projections.
pub fn classical_correlation_at(m: &M, db: usize, n: [f64; 3]) -> f64 {
    let s_b = entropy(&trace_out_a(m, 2, db));
    let id_b = M::identity(db, db);
    let mut conditional = 0.0;
    for p in bloch_projectors(n) {
        let lift = p.kronecker(&id_b);
        let block = &lift * m * &lift;
        let rho_b = trace_out_a(&block, 2, db);
        let prob = rho_b.trace().re;
        if prob > 1e-14 {
            conditional += prob * entropy(&(rho_b / cx(prob, 0.0)));
        }
    }
    s_b - conditional
}

/// Discord of a `2 ⊗ db` state by exhaustive search over a Bloch-angle grid.
pub fn grid_discord(m: &M, db: usize, n_theta: usize, n_phi: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..=n_theta {
        let theta = std::f64::consts::PI * i as f64 / n_theta as f64;
        for j in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
            let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
            best = best.max(classical_correlation_at(m, db, n));
            if i == 0 || i == n_theta {
                break;
            }
        }
    }
    mutual_information(m, 2, db) - best
}

/// `Φ(X) = tr_in[(Xᵀ ⊗ 𝟙) J]` from a Choi matrix with the input slot first.
pub fn apply_via_choi(j: &M, x: &M, d_in: usize, d_out: usize) -> M {
    let mut out = M::zeros(d_out, d_out);
    for a in 0..d_out {
        for b in 0..d_out {
            for i in 0..d_in {
                for k in 0..d_in {
                    out[(a, b)] += x[(i, k)] * j[(i * d_out + a, k * d_out + b)];
                }
            }
        }
    }
    out
}

/// Smallest eigenvalue of the partially transposed normalized Choi matrix of
/// the qubit depolarizing map `X ↦ λX + (1−λ) tr[X] 𝟙/2`, built entry by entry.
pub fn depolarizing_ppt_min(lambda: f64) -> f64 {
    let mut j = M::zeros(4, 4);
    for i in 0..2 {
        for k in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let mut v = 0.0;
                    if i == a && k == b {
                        v += lambda;
                    }
                    if i == k && a == b {
                        v += (1.0 - lambda) / 2.0;
                    }
                    // Partial transpose on the output slot swaps a and b.
                    j[(i * 2 + b, k * 2 + a)] = cx(v / 2.0, 0.0);
                }
            }
        }
    }
    eigenvalues(&j)[0]
}

pub fn ket(amplitudes: &[Complex64]) -> nalgebra::DVector<Complex64> {
    let v = nalgebra::DVector::from_column_slice(amplitudes);
    let n = v.norm();
    v / cx(n, 0.0)
}

pub fn proj(v: &nalgebra::DVector<Complex64>) -> M {
    v * v.adjoint()
}
