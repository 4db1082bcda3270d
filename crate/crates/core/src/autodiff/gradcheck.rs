//! Central finite-difference verification of reverse-mode gradients.

use crate::error::{Error, Result};

use super::{Tape, Tensor};

/// Compare analytic gradients of `f` against central differences at the
/// given parameter values. Returns the maximum over all parameter entries of
/// `|analytic - numeric| / max(1, |analytic|, |numeric|)`.
///
/// `f` is called with fresh leaves on a fresh tape for every evaluation and
/// must be deterministic.
pub fn gradient_check<F>(
    params: &[(Vec<usize>, Vec<f64>)],
    eps: f64,
    f: F,
) -> Result<f64>
where
    F: Fn(&Tape, &[Tensor]) -> Result<Tensor>,
{
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }

    let eval = |values: &[(Vec<usize>, Vec<f64>)]| -> Result<(f64, Vec<Vec<f64>>)> {
        let tape = Tape::new();
        let leaves: Vec<Tensor> = values
            .iter()
            .map(|(shape, data)| tape.leaf(shape, data.clone()))
            .collect::<Result<_>>()?;
        let loss = f(&tape, &leaves)?;
        if !loss.is_scalar() {
            return Err(Error::Shape(format!(
                "gradient check needs a scalar loss, got shape {:?}",
                loss.shape()
            )));
        }
        let value = loss.item()?;
        loss.backward()?;
        let grads = leaves
            .iter()
            .map(|l| {
                l.grad()
                    .map(|g| g.data().to_vec())
                    .unwrap_or_else(|| vec![0.0; l.len()])
            })
            .collect();
        Ok((value, grads))
    };

    let forward_only = |values: &[(Vec<usize>, Vec<f64>)]| -> Result<f64> {
        let tape = Tape::new();
        let leaves: Vec<Tensor> = values
            .iter()
            .map(|(shape, data)| tape.leaf(shape, data.clone()))
            .collect::<Result<_>>()?;
        f(&tape, &leaves)?.item()
    };

    let (_, analytic) = eval(params)?;

    let mut worst = 0.0f64;
    let mut perturbed = params.to_vec();
    for (pi, (_, data)) in params.iter().enumerate() {
        for ei in 0..data.len() {
            let orig = data[ei];
            perturbed[pi].1[ei] = orig + eps;
            let plus = forward_only(&perturbed)?;
            perturbed[pi].1[ei] = orig - eps;
            let minus = forward_only(&perturbed)?;
            perturbed[pi].1[ei] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic[pi][ei];
            let rel = (a - numeric).abs() / 1.0f64.max(a.abs()).max(numeric.abs());
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_near_exact() {
        let params = vec![(vec![3], vec![0.5, -1.25, 2.0])];
        let err = gradient_check(&params, 1e-5, |_, leaves| {
            leaves[0].mul(&leaves[0])?.sum_all()
        })
        .unwrap();
        assert!(err < 1e-8, "relative error {err}");
    }

    #[test]
    fn constant_function_has_zero_error() {
        let params = vec![(vec![2], vec![1.0, 2.0])];
        let err = gradient_check(&params, 1e-5, |_, leaves| {
            leaves[0].scale(0.0)?.sum_all()
        })
        .unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn composite_expression_matches_finite_differences() {
        let params = vec![
            (vec![2, 3], vec![0.3, -0.2, 0.5, 0.1, 0.7, -0.4]),
            (vec![3, 2], vec![1.1, -0.6, 0.2, 0.9, -0.3, 0.4]),
            (vec![2], vec![0.05, -0.15]),
        ];
        let err = gradient_check(&params, 1e-5, |_, leaves| {
            let h = leaves[0]
                .matmul(&leaves[1])?
                .add(&leaves[2])?
                .tanh_act()?
                .sigmoid()?;
            let s = h.softmax_lastdim()?;
            s.mul(&h)?.sum_all()
        })
        .unwrap();
        assert!(err < 1e-6, "relative error {err}");
    }

    #[test]
    fn every_core_op_passes_a_finite_difference_check() {
        let x = (
            vec![3, 4],
            vec![
                0.2, -0.4, 0.6, 0.1, //
                -0.3, 0.5, 0.05, -0.7, //
                0.9, -0.1, 0.3, 0.25,
            ],
        );
        type Build = fn(&[Tensor]) -> crate::error::Result<Tensor>;
        let cases: Vec<(&str, Build)> = vec![
            ("relu", |l| l[0].relu()?.mul(&l[0])?.sum_all()),
            ("sigmoid", |l| l[0].sigmoid()?.sum_all()),
            ("tanh", |l| l[0].tanh_act()?.sum_all()),
            ("softmax", |l| {
                l[0].softmax_lastdim()?.mul(&l[0])?.sum_all()
            }),
            ("log_softmax", |l| {
                l[0].log_softmax_lastdim()?.mul(&l[0])?.sum_all()
            }),
            ("mean_axis0", |l| l[0].mean_axis0()?.mul(&l[0].index_axis0(1)?)?.sum_all()),
            ("slice", |l| l[0].slice_lastdim(1, 2)?.sum_all()),
            ("swap01", |l| {
                l[0].swap01()?.matmul(&l[0])?.sum_all()
            }),
            ("stack_concat", |l| {
                let s = Tensor::stack0(&[l[0].clone(), l[0].relu()?])?;
                let c = Tensor::concat_lastdim(&[l[0].clone(), l[0].sigmoid()?])?;
                s.sum_all()?.add(&c.sum_all()?)
            }),
            ("nll", |l| {
                l[0].log_softmax_lastdim()?.nll_sum(&[0, 2, 3])?.scale(1.0 / 3.0)
            }),
        ];
        for (name, build) in cases {
            let err = gradient_check(std::slice::from_ref(&x), 1e-5, |_, leaves| build(leaves))
                .unwrap();
            assert!(err < 1e-6, "{name}: relative error {err}");
        }
    }
}
