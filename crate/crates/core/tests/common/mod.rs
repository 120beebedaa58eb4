//! Independent oracles shared by the integration suites.

#![allow(dead_code, clippy::needless_range_loop)]

use malviz::features::GrayPlane;

/// Textbook Haralick statistics, written for clarity rather than speed.
pub fn brute_force_haralick(plane: &GrayPlane, offset: (isize, isize), levels: usize) -> [f64; 13] {
    let q = |v: u8| (v as usize * levels) / 256;
    let mut p = vec![vec![0.0f64; levels]; levels];
    let mut pairs = 0.0;
    for r in 0..plane.height as isize {
        for c in 0..plane.width as isize {
            let (r2, c2) = (r + offset.0, c + offset.1);
            if r2 < 0 || c2 < 0 || r2 >= plane.height as isize || c2 >= plane.width as isize {
                continue;
            }
            let a = q(plane.get(r as usize, c as usize));
            let b = q(plane.get(r2 as usize, c2 as usize));
            p[a][b] += 1.0;
            p[b][a] += 1.0;
            pairs += 2.0;
        }
    }
    for row in p.iter_mut() {
        for v in row.iter_mut() {
            *v /= pairs;
        }
    }
    let g = levels;
    let plog = |v: f64| if v > 0.0 { v * v.log2() } else { 0.0 };
    let px: Vec<f64> = (0..g).map(|i| (0..g).map(|j| p[i][j]).sum()).collect();
    let py: Vec<f64> = (0..g).map(|j| (0..g).map(|i| p[i][j]).sum()).collect();
    let mut psum = vec![0.0; 2 * g - 1];
    let mut pdiff = vec![0.0; g];
    for i in 0..g {
        for j in 0..g {
            psum[i + j] += p[i][j];
            pdiff[i.abs_diff(j)] += p[i][j];
        }
    }
    let mut asm = 0.0;
    let mut idm = 0.0;
    let mut ent = 0.0;
    let mut mux = 0.0;
    let mut muy = 0.0;
    for i in 0..g {
        for j in 0..g {
            asm += p[i][j] * p[i][j];
            idm += p[i][j] / (1.0 + ((i as f64 - j as f64).powi(2)));
            ent -= plog(p[i][j]);
            mux += i as f64 * p[i][j];
            muy += j as f64 * p[i][j];
        }
    }
    let mut contrast = 0.0;
    for (n, &v) in pdiff.iter().enumerate() {
        contrast += (n * n) as f64 * v;
    }
    let mut sx2 = 0.0;
    let mut sy2 = 0.0;
    let mut cov = 0.0;
    for i in 0..g {
        for j in 0..g {
            sx2 += (i as f64 - mux).powi(2) * p[i][j];
            sy2 += (j as f64 - muy).powi(2) * p[i][j];
            cov += (i as f64 - mux) * (j as f64 - muy) * p[i][j];
        }
    }
    let correlation = if (sx2 * sy2).sqrt() > 1e-12 {
        cov / (sx2 * sy2).sqrt()
    } else {
        1.0
    };
    let sum_avg: f64 = psum.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    let sum_var: f64 = psum
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as f64 - sum_avg).powi(2) * v)
        .sum();
    let sum_ent: f64 = -psum.iter().map(|&v| plog(v)).sum::<f64>();
    let diff_mean: f64 = pdiff.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    let diff_var: f64 = pdiff
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as f64 - diff_mean).powi(2) * v)
        .sum();
    let diff_ent: f64 = -pdiff.iter().map(|&v| plog(v)).sum::<f64>();
    let hx: f64 = -px.iter().map(|&v| plog(v)).sum::<f64>();
    let hy: f64 = -py.iter().map(|&v| plog(v)).sum::<f64>();
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..g {
        for j in 0..g {
            let m = px[i] * py[j];
            if m > 0.0 {
                hxy1 -= p[i][j] * m.log2();
                hxy2 -= m * m.log2();
            }
        }
    }
    let imc1 = if hx.max(hy) > 1e-12 {
        (ent - hxy1) / hx.max(hy)
    } else {
        0.0
    };
    let imc2 = (1.0 - (-2.0 * (hxy2 - ent)).exp()).max(0.0).sqrt();
    [
        asm,
        contrast,
        correlation,
        sx2,
        idm,
        sum_avg,
        sum_var,
        sum_ent,
        ent,
        diff_var,
        diff_ent,
        imc1,
        imc2,
    ]
}
