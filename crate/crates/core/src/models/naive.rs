/// Seasonal-naive forecast: output step `j` copies context step `l - s + (j mod s)`.
pub(crate) fn forecast(x: &[f64], season: usize, out: &mut [f64]) {
    let start = x.len() - season;
    for (j, y) in out.iter_mut().enumerate() {
        *y = x[start + j % season];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_value_carried_forward() {
        let mut out = [0.0; 3];
        forecast(&[1.0, 4.0, 2.0], 1, &mut out);
        assert_eq!(out, [2.0; 3]);
    }

    #[test]
    fn repeats_last_season() {
        let mut out = [0.0; 5];
        forecast(&[9.0, 1.0, 2.0, 3.0], 3, &mut out);
        assert_eq!(out, [1.0, 2.0, 3.0, 1.0, 2.0]);
    }
}
