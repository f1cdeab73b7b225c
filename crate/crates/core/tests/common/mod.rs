#![allow(dead_code)]

pub mod jacobian;

/// Indices of the interior local maxima of `y`. A run of equal samples counts
/// once, and only if it rises from the left and falls to the right without
/// touching either end of the series.
pub fn interior_maxima(y: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut k = 1;
    while k + 1 < y.len() {
        let mut end = k;
        while end + 1 < y.len() && y[end + 1] == y[k] {
            end += 1;
        }
        if end + 1 < y.len() && y[k - 1] < y[k] && y[end + 1] < y[k] {
            out.push(k);
        }
        k = end + 1;
    }
    out
}

/// Three-point running median with the end points kept, written out
/// independently of the library's smoother.
pub fn smooth3(y: &[f64]) -> Vec<f64> {
    (0..y.len())
        .map(|k| {
            if k == 0 || k + 1 == y.len() {
                return y[k];
            }
            let (a, b, c) = (y[k - 1], y[k], y[k + 1]);
            a.max(b).min(a.min(b).max(c))
        })
        .collect()
}

#[test]
fn helpers_behave() {
    assert_eq!(interior_maxima(&[0.0, 1.0, 1.0, 0.0, 2.0]), vec![1]);
    assert!(interior_maxima(&[0.0, 1.0, 2.0]).is_empty());
    assert_eq!(smooth3(&[0.0, 5.0, 1.0, 2.0]), vec![0.0, 1.0, 2.0, 2.0]);
}
