use densum::linalg::{cholesky, householder_qr, least_squares_weights, spd_inverse};
use densum::Matrix;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn max_gap(a: &Matrix, b: &DMatrix<f64>) -> f64 {
    (0..a.rows())
        .flat_map(|i| (0..a.cols()).map(move |j| (i, j)))
        .map(|(i, j)| (a[(i, j)] - b[(i, j)]).abs())
        .fold(0.0, f64::max)
}

fn spd(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |v| {
        let a = Matrix::from_vec(n, n, v).unwrap();
        let mut s = a.matmul(&a.transpose()).unwrap();
        for i in 0..n {
            s[(i, i)] += n as f64 * 0.1;
        }
        s
    })
}

fn tall(n: usize, p: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0..2.0f64, n * p).prop_map(move |v| {
        let mut x = Matrix::from_vec(n, p, v).unwrap();
        // keep the columns comfortably independent
        for j in 0..p {
            x[(j, j)] += 5.0;
        }
        x
    })
}

proptest! {
    #[test]
    fn cholesky_matches_nalgebra(a in (1usize..8).prop_flat_map(spd)) {
        let l = cholesky(&a).unwrap();
        let na = nalgebra::Cholesky::new(to_na(&a)).unwrap().l();
        prop_assert!(max_gap(&l, &na) < 1e-10);
    }

    #[test]
    fn spd_inverse_matches_nalgebra(a in (1usize..8).prop_flat_map(spd)) {
        let inv = spd_inverse(&a).unwrap();
        let na = to_na(&a).try_inverse().unwrap();
        let scale = na.amax().max(1.0);
        prop_assert!(max_gap(&inv, &na) < 1e-9 * scale);
    }

    #[test]
    fn least_squares_matches_nalgebra(
        (x, y) in (1usize..5).prop_flat_map(|p| (p + 1..20).prop_flat_map(move |n| {
            (tall(n, p), prop::collection::vec(-10.0..10.0f64, n))
        }))
    ) {
        let qr = householder_qr(&x).unwrap();
        let w = least_squares_weights(&qr);
        let beta = w.matvec(&y).unwrap();
        let xa = to_na(&x);
        let ya = nalgebra::DVector::from_column_slice(&y);
        let na = (xa.transpose() * &xa).cholesky().unwrap().solve(&(xa.transpose() * ya));
        for (b, c) in beta.iter().zip(na.iter()) {
            prop_assert!((b - c).abs() < 1e-8 * c.abs().max(1.0));
        }
        let rebuilt = qr.q.matmul(&qr.r).unwrap();
        prop_assert!(max_gap(&rebuilt, &xa) < 1e-10);
    }
}

#[test]
fn rank_deficiency_reported() {
    let x = Matrix::from_columns(&[vec![1.0, 2.0, 3.0, 4.0], vec![2.0, 4.0, 6.0, 8.0]]).unwrap();
    assert!(householder_qr(&x).is_err());
}
