//! Mini-batch k-means with per-centroid learning rates.

use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MiniBatchKMeans {
    pub k: usize,
    pub batch_size: usize,
    pub iterations: usize,
}

pub fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| ((x - y) as f64).powi(2)).sum()
}

pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum()
}

/// Unit-length copy; the zero vector stays zero.
pub fn normalized(v: &[f32]) -> Vec<f32> {
    let n = dot(v, v).sqrt();
    if n == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| (*x as f64 / n) as f32).collect()
    }
}

pub fn nearest(centroids: &[Vec<f32>], x: &[f32]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, x);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

impl MiniBatchKMeans {
    /// Returns `min(k, n)` centroids. Initial centroids are a uniform sample
    /// of the data (reservoir sampling); each centroid moves towards its
    /// assigned batch points with rate `1 / (points seen so far)`.
    pub fn fit(&self, data: &[&[f32]], rng: &mut impl Rng) -> Vec<Vec<f32>> {
        let n = data.len();
        let k = self.k.min(n);
        if k == 0 {
            return Vec::new();
        }
        let mut reservoir: Vec<usize> = (0..k).collect();
        for i in k..n {
            let j = rng.random_range(0..=i);
            if j < k {
                reservoir[j] = i;
            }
        }
        let mut centroids: Vec<Vec<f32>> = reservoir.iter().map(|&i| data[i].to_vec()).collect();
        let mut counts = vec![0u64; k];
        let full_batch = n <= self.batch_size;
        let mut batch = Vec::with_capacity(self.batch_size.min(n));
        let mut assign = Vec::with_capacity(batch.capacity());
        for _ in 0..self.iterations {
            batch.clear();
            if full_batch {
                batch.extend(0..n);
            } else {
                batch.extend((0..self.batch_size).map(|_| rng.random_range(0..n)));
            }
            assign.clear();
            assign.extend(batch.iter().map(|&i| nearest(&centroids, data[i])));
            for (&i, &c) in batch.iter().zip(&assign) {
                counts[c] += 1;
                let eta = 1.0 / counts[c] as f32;
                for (cv, xv) in centroids[c].iter_mut().zip(data[i]) {
                    *cv += eta * (xv - *cv);
                }
            }
        }
        centroids
    }
}

pub fn assign_all(centroids: &[Vec<f32>], data: &[&[f32]]) -> Vec<usize> {
    data.iter().map(|x| nearest(centroids, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separates_well_spaced_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let centers = [[0.0f32, 0.0], [10.0, 0.0], [0.0, 10.0]];
        let pts: Vec<Vec<f32>> = (0..300)
            .map(|i| {
                let c = centers[i % 3];
                vec![c[0] + rng.random_range(-0.5..0.5), c[1] + rng.random_range(-0.5..0.5)]
            })
            .collect();
        let data: Vec<&[f32]> = pts.iter().map(Vec::as_slice).collect();
        let km = MiniBatchKMeans { k: 3, batch_size: 64, iterations: 30 };
        // a reservoir init can land two seeds in one blob; some seed separates them
        let ok = (0..5).any(|s| {
            let cents = km.fit(&data, &mut ChaCha8Rng::seed_from_u64(s));
            let labels = assign_all(&cents, &data);
            (0..3).all(|b| {
                let l = labels[b];
                (b..300).step_by(3).all(|i| labels[i] == l)
            }) && labels[0] != labels[1]
                && labels[1] != labels[2]
                && labels[0] != labels[2]
        });
        assert!(ok);
    }

    #[test]
    fn k_is_clamped_to_population() {
        let pts = [vec![1.0f32], vec![2.0]];
        let data: Vec<&[f32]> = pts.iter().map(Vec::as_slice).collect();
        let km = MiniBatchKMeans { k: 5, batch_size: 8, iterations: 3 };
        assert_eq!(km.fit(&data, &mut ChaCha8Rng::seed_from_u64(0)).len(), 2);
        assert!(km.fit(&[], &mut ChaCha8Rng::seed_from_u64(0)).is_empty());
    }

    #[test]
    fn normalization() {
        let v = normalized(&[3.0, 4.0]);
        assert!((v[0] - 0.6).abs() < 1e-7 && (v[1] - 0.8).abs() < 1e-7);
        assert_eq!(normalized(&[0.0, 0.0]), vec![0.0, 0.0]);
    }
}
