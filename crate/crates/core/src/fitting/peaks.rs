//! Local-maximum detection with prominence filtering.

/// A detected local maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub value: f64,
    /// Height above the higher of the two flanking minima that separate the
    /// peak from taller terrain.
    pub prominence: f64,
}

/// Find strict local maxima of `y` whose prominence is at least
/// `min_prominence_ratio * value` and whose value is at least `min_value`.
/// Returned sorted by value, largest first.
pub fn find_peaks(y: &[f64], min_prominence_ratio: f64, min_value: f64) -> Vec<Peak> {
    let n = y.len();
    let mut peaks = Vec::new();
    if n < 3 {
        return peaks;
    }
    for i in 1..n - 1 {
        if !(y[i] > y[i - 1] && y[i] > y[i + 1]) {
            continue;
        }
        if y[i] < min_value {
            continue;
        }
        // Walk outward to the nearest strictly taller sample on each side;
        // the prominence base on that side is the minimum in between.
        let mut left_min = y[i];
        let mut j = i;
        while j > 0 {
            j -= 1;
            if y[j] > y[i] {
                break;
            }
            left_min = left_min.min(y[j]);
        }
        let mut right_min = y[i];
        let mut j = i;
        while j + 1 < n {
            j += 1;
            if y[j] > y[i] {
                break;
            }
            right_min = right_min.min(y[j]);
        }
        let prominence = y[i] - left_min.max(right_min);
        if prominence >= min_prominence_ratio * y[i] {
            peaks.push(Peak {
                index: i,
                value: y[i],
                prominence,
            });
        }
    }
    peaks.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap_or(std::cmp::Ordering::Equal));
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_signal_has_no_peaks() {
        let y = vec![1.0; 64];
        assert!(find_peaks(&y, 0.1, 0.0).is_empty());
    }

    #[test]
    fn single_bump_is_found() {
        let y: Vec<f64> = (0..101)
            .map(|i| {
                let x = (i as f64 - 50.0) / 10.0;
                (-x * x).exp()
            })
            .collect();
        let peaks = find_peaks(&y, 0.5, 0.0);
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0].index, 50);
        assert!((peaks[0].prominence - 1.0).abs() < 1e-6);
    }

    #[test]
    fn small_ripples_are_rejected_by_prominence() {
        // A tall peak over an elevated background with a tiny ripple aside.
        let mut y: Vec<f64> = (0..201)
            .map(|i| {
                let x = (i as f64 - 100.0) / 12.0;
                0.5 + (-x * x).exp()
            })
            .collect();
        y[150] += 0.004; // prominence 0.004 on a value near 0.5
        let strict = find_peaks(&y, 0.5, 0.0);
        assert_eq!(strict.len(), 1);
        assert_eq!(strict[0].index, 100);
        let loose = find_peaks(&y, 1e-4, 0.0);
        assert!(loose.len() >= 2);
    }

    #[test]
    fn two_separated_peaks_sorted_by_height() {
        let y: Vec<f64> = (0..400)
            .map(|i| {
                let x = i as f64;
                let p1 = 0.6 * (-((x - 100.0) / 15.0).powi(2)).exp();
                let p2 = 1.0 * (-((x - 300.0) / 15.0).powi(2)).exp();
                p1 + p2
            })
            .collect();
        let peaks = find_peaks(&y, 0.3, 0.0);
        assert_eq!(peaks.len(), 2);
        assert_eq!(peaks[0].index, 300);
        assert_eq!(peaks[1].index, 100);
    }
}
