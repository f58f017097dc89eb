use rand::Rng;

use crate::error::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations.
///
/// Stops when assignments stop changing or after `max_iter` rounds. A
/// cluster that loses all its points keeps its previous centre.
pub fn kmeans<R: Rng + ?Sized>(points: &[&[f64]], k: usize, max_iter: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(Error::Config("k-means needs at least one cluster".into()));
    }
    if points.len() < k {
        return Err(Error::Config(format!(
            "k-means needs at least {k} points, got {}",
            points.len()
        )));
    }
    let dim = points[0].len();

    let mut centers: Vec<Vec<f64>> = vec![points[rng.gen_range(0..points.len())].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut pick = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            // every point coincides with a centre already
            rng.gen_range(0..points.len())
        };
        centers.push(points[pick].to_vec());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }

    let mut assign = vec![usize::MAX; points.len()];
    for _ in 0..max_iter {
        let mut changed = false;
        for (a, p) in assign.iter_mut().zip(points) {
            let (c, _) = nearest(p, &centers);
            if *a != c {
                *a = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assign.iter().zip(points) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        for ((center, sum), &n) in centers.iter_mut().zip(sums).zip(&counts) {
            if n > 0 {
                *center = sum.into_iter().map(|s| s / n as f64).collect();
            }
        }
    }
    Ok(centers)
}
