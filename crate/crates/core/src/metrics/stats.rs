//! Paired t-test and inter-domain center distance.

use crate::metrics::MetricsError;

/// Rows of `(domain label, feature vector)`, all vectors the same length.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    rows: Vec<(String, Vec<f64>)>,
    dim: usize,
}

impl FeatureTable {
    pub fn from_rows(rows: Vec<(String, Vec<f64>)>) -> Result<Self, MetricsError> {
        let Some(dim) = rows.first().map(|(_, v)| v.len()) else {
            return Err(MetricsError::TooFewDomains { found: 0 });
        };
        for (label, v) in &rows {
            if v.len() != dim {
                return Err(MetricsError::FeatureDimensionMismatch {
                    domain: label.clone(),
                    expected: dim,
                    found: v.len(),
                });
            }
        }
        Ok(Self { rows, dim })
    }

    pub fn rows(&self) -> &[(String, Vec<f64>)] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Distinct domain labels in first-appearance order.
    pub fn domains(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for (label, _) in &self.rows {
            if !seen.contains(label) {
                seen.push(label.clone());
            }
        }
        seen
    }
}

/// Mean Euclidean distance between per-domain center vectors over all
/// unordered domain pairs.
pub fn domain_inter_distance(features: &FeatureTable) -> Result<f64, MetricsError> {
    let domains = features.domains();
    if domains.len() < 2 {
        return Err(MetricsError::TooFewDomains {
            found: domains.len(),
        });
    }
    let mut centers = Vec::with_capacity(domains.len());
    for domain in &domains {
        let mut center = vec![0.0; features.dim()];
        let mut count = 0.0;
        for (label, v) in features.rows() {
            if label == domain {
                for (c, x) in center.iter_mut().zip(v) {
                    *c += x;
                }
                count += 1.0;
            }
        }
        for c in &mut center {
            *c /= count;
        }
        centers.push(center);
    }
    let mut sum = 0.0;
    let mut pairs = 0.0;
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            let d: f64 = centers[i]
                .iter()
                .zip(&centers[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            sum += d;
            pairs += 1.0;
        }
    }
    Ok(sum / pairs)
}

/// Number of unordered domain pairs entering [`domain_inter_distance`].
pub fn domain_pair_count(features: &FeatureTable) -> usize {
    let n = features.domains().len();
    n * (n - 1) / 2
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    pub p_two_sided: f64,
    pub dof: usize,
}

/// Two-sided paired t-test: `t = mean(d) / (sd(d) / sqrt(n))` with the
/// sample (n-1) standard deviation, `dof = n - 1`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(MetricsError::TooFewSamples { found: a.len() });
    }
    let n = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n;
    let ss = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    let var = ss / (n - 1.0);
    if var == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    let t = mean / (var.sqrt() / n.sqrt());
    let dof = a.len() - 1;
    Ok(TTestResult {
        t,
        p_two_sided: student_t_p_two_sided(t, dof as f64),
        dof,
    })
}

/// Two-sided p-value from Student's t CDF:
/// `p = I_{v/(v+t^2)}(v/2, 1/2)` with the regularized incomplete beta.
pub fn student_t_p_two_sided(t: f64, dof: f64) -> f64 {
    regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t))
}

/// Lanczos approximation of `ln Gamma(x)` for `x > 0`.
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.180_091_729_471_46,
        -86.505_320_329_416_77,
        24.014_098_240_830_91,
        -1.231_739_572_450_155,
        0.120_865_097_386_617_5e-2,
        -0.539_523_938_495_3e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut series = 1.000_000_000_190_015;
    for c in COEFFS {
        y += 1.0;
        series += c / y;
    }
    -tmp + (2.506_628_274_631_000_5 * series / x).ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 3e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
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

/// Regularized incomplete beta `I_x(a, b)`, accurate to ~1e-14.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front =
        (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}
