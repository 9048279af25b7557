//! Ranking metrics and the paired-comparison statistics used in reports.

use serde::{Deserialize, Serialize};

use crate::error::{LimeadeError, Result};

/// `sum_i r_i / log2(i + 1)` with positions starting at 1.
pub fn dcg(relevances: &[f64]) -> f64 {
    relevances
        .iter()
        .enumerate()
        .map(|(i, r)| r / ((i + 2) as f64).log2())
        .sum()
}

/// DCG normalized by the DCG of the descending sort; 0 for an all-zero list.
pub fn ndcg(relevances: &[f64]) -> f64 {
    let mut ideal = relevances.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let best = dcg(&ideal);
    if best <= 0.0 {
        0.0
    } else {
        (dcg(relevances) / best).min(1.0)
    }
}

/// Mean of precision@k over relevant positions; 0 when nothing is relevant.
pub fn average_precision(relevances: &[f64]) -> Result<f64> {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &r) in relevances.iter().enumerate() {
        if r == 1.0 {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        } else if r != 0.0 {
            return Err(LimeadeError::Value(format!(
                "average precision needs binary relevance, got {r} at {i}"
            )));
        }
    }
    Ok(if hits == 0 { 0.0 } else { sum / hits as f64 })
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn standard_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        0.0
    } else {
        sample_sd(xs) / (xs.len() as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p_two_sided: f64,
    pub df: usize,
}

/// Two-sided paired t-test of `mean(a - b) = 0`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(LimeadeError::Shape {
            expected: a.len(),
            got: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(LimeadeError::DegenerateTest(format!("need at least 2 pairs, got {n}")));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let sd = sample_sd(&d);
    if sd.is_nan() || sd <= 0.0 {
        return Err(LimeadeError::DegenerateTest("paired differences have zero variance".into()));
    }
    let t = mean(&d) / (sd / (n as f64).sqrt());
    let df = n - 1;
    Ok(TTest {
        t,
        p_two_sided: student_t_two_sided_p(t, df as f64),
        df,
    })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom, via the
/// regularized incomplete beta `I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// Student-t CDF.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = student_t_two_sided_p(t, df) / 2.0;
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7, n = 9.
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `I_x(a, b)` by Lentz's continued fraction.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_bonferroni(pvals: &[f64]) -> Result<Vec<f64>> {
    if let Some(p) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(LimeadeError::Value(format!("p-value out of range: {p}")));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &i) in order.iter().enumerate() {
        let v = ((m - rank) as f64 * pvals[i]).min(1.0);
        running = running.max(v);
        adjusted[i] = running;
    }
    Ok(adjusted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dcg_examples() {
        assert!((dcg(&[3., 2., 3., 0., 1., 2.]) - 6.86113).abs() < 1e-5);
        assert_eq!(dcg(&[]), 0.0);
        assert_eq!(dcg(&[2.5]), 2.5);
    }

    #[test]
    fn ndcg_examples() {
        assert_eq!(ndcg(&[3., 2., 1., 0.]), 1.0);
        assert!((ndcg(&[0., 1.]) - 1.0 / 3f64.log2()).abs() < 1e-12);
        assert!((ndcg(&[0., 1.]) - 0.63093).abs() < 1e-5);
        assert_eq!(ndcg(&[0., 0., 0.]), 0.0);
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[1., 1., 0.]).unwrap(), 1.0);
        assert_eq!(average_precision(&[0., 1.]).unwrap(), 0.5);
        assert_eq!(average_precision(&[0., 0.]).unwrap(), 0.0);
        assert!(average_precision(&[0., 2.]).is_err());
    }

    #[test]
    fn t_test_examples() {
        let zero = paired_t_test(&[0., 1.], &[1., 0.]).unwrap();
        assert_eq!(zero.t, 0.0);
        assert!((zero.p_two_sided - 1.0).abs() < 1e-12);

        let r = paired_t_test(&[1., 2., 3.], &[0., 0., 0.]).unwrap();
        assert!((r.t - 12f64.sqrt()).abs() < 1e-12);
        // df = 2 closed form: CDF = 0.5 + t / (2 sqrt(t^2 + 2)).
        let closed = 2.0 * (1.0 - (0.5 + r.t / (2.0 * (r.t * r.t + 2.0).sqrt())));
        assert!((r.p_two_sided - closed).abs() < 1e-12);
        assert!((r.p_two_sided - 0.07418).abs() < 1e-5);

        let s = paired_t_test(&[0., 0., 0.], &[1., 2., 3.]).unwrap();
        assert_eq!(s.t, -r.t);
        assert_eq!(s.p_two_sided, r.p_two_sided);

        assert!(matches!(
            paired_t_test(&[1., 2.], &[0., 1.]),
            Err(LimeadeError::DegenerateTest(_))
        ));
    }

    #[test]
    fn holm_examples() {
        assert_eq!(holm_bonferroni(&[0.3]).unwrap(), vec![0.3]);
        let adj = holm_bonferroni(&[0.01, 0.04]).unwrap();
        assert!((adj[0] - 0.02).abs() < 1e-15 && (adj[1] - 0.04).abs() < 1e-15);
        let big = holm_bonferroni(&[0.6, 0.9, 0.5]).unwrap();
        assert!(big.iter().all(|p| *p <= 1.0));
        assert!(holm_bonferroni(&[1.2]).is_err());
    }
}
