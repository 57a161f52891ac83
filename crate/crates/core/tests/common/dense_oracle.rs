//! Explicit `2^m × 2^m` gate matrices built from Kronecker products.

use num_complex::Complex64;
use qcse_core::qsim::GateOp;

pub type Mat = Vec<Vec<Complex64>>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn identity(n: usize) -> Mat {
    (0..n)
        .map(|i| (0..n).map(|j| c((i == j) as u8 as f64, 0.0)).collect())
        .collect()
}

fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect()
}

pub fn matvec(a: &Mat, v: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// Full operator with `ops[q]` on qubit `q`; qubit 0 is the rightmost factor.
fn embed(m: usize, ops: &[(usize, Mat)]) -> Mat {
    let mut out = vec![vec![c(1.0, 0.0)]];
    for q in (0..m).rev() {
        let f = ops
            .iter()
            .find(|(p, _)| *p == q)
            .map(|(_, g)| g.clone())
            .unwrap_or_else(|| identity(2));
        out = kron(&out, &f);
    }
    out
}

fn single(op: &GateOp) -> Option<(usize, Mat)> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    Some(match *op {
        GateOp::H(q) => (q, vec![vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]]),
        GateOp::X(q) => (q, vec![vec![z, c(1.0, 0.0)], vec![c(1.0, 0.0), z]]),
        GateOp::Y(q) => (q, vec![vec![z, c(0.0, -1.0)], vec![c(0.0, 1.0), z]]),
        GateOp::Z(q) => (q, vec![vec![c(1.0, 0.0), z], vec![z, c(-1.0, 0.0)]]),
        GateOp::RX(q, t) => {
            let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
            (q, vec![vec![c(co, 0.0), c(0.0, -si)], vec![c(0.0, -si), c(co, 0.0)]])
        }
        GateOp::RZ(q, t) => (q, rz(t)),
        _ => return None,
    })
}

fn rz(t: f64) -> Mat {
    let z = c(0.0, 0.0);
    vec![
        vec![Complex64::from_polar(1.0, -t / 2.0), z],
        vec![z, Complex64::from_polar(1.0, t / 2.0)],
    ]
}

pub fn dense(m: usize, op: &GateOp) -> Mat {
    if let Some(g) = single(op) {
        return embed(m, &[g]);
    }
    let z = c(0.0, 0.0);
    let p0 = vec![vec![c(1.0, 0.0), z], vec![z, z]];
    let p1 = vec![vec![z, z], vec![z, c(1.0, 0.0)]];
    let (control, target, g) = match *op {
        GateOp::CNOT { control, target } => (control, target, single(&GateOp::X(0)).unwrap().1),
        GateOp::CZ { control, target } => (control, target, single(&GateOp::Z(0)).unwrap().1),
        GateOp::CRZ {
            control,
            target,
            angle,
        } => (control, target, rz(angle)),
        _ => unreachable!(),
    };
    add(
        &embed(m, &[(control, p0)]),
        &embed(m, &[(control, p1), (target, g)]),
    )
}
