//! Deterministic sampling helpers: Fibonacci sphere points and seeded
//! uniform samples in balls and boxes.

use crate::vec3::{vec3, Vec3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded RNG used everywhere randomness is needed. Substream ids keep
/// parallel loops deterministic regardless of scheduling.
pub fn rng_for(seed: u64, substream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(substream);
    r
}

/// `n` near-uniform points on the unit sphere (Fibonacci spiral).
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    // Golden-angle increment; offset of 0.5 avoids exact poles.
    let phi = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let a = phi * k as f64;
            vec3(rho * a.cos(), rho * a.sin(), z)
        })
        .collect()
}

/// Uniform point in the ball `center + radius * B(0,1)`.
pub fn uniform_in_ball(rng: &mut ChaCha8Rng, center: Vec3, radius: f64) -> Vec3 {
    let dir = uniform_on_sphere(rng);
    let u: f64 = rng.random();
    center + dir * (radius * u.cbrt())
}

/// Uniform direction on the unit sphere.
pub fn uniform_on_sphere(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = vec3(
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        );
        let n2 = v.norm_sq();
        if n2 > 1e-12 && n2 <= 1.0 {
            return v * (1.0 / n2.sqrt());
        }
    }
}

/// Uniform point in an axis-aligned box.
pub fn uniform_in_box(rng: &mut ChaCha8Rng, lo: Vec3, hi: Vec3) -> Vec3 {
    vec3(
        lo.x + rng.random::<f64>() * (hi.x - lo.x),
        lo.y + rng.random::<f64>() * (hi.y - lo.y),
        lo.z + rng.random::<f64>() * (hi.z - lo.z),
    )
}

/// Two unit vectors spanning the plane orthogonal to `axis` (unit).
pub fn orthonormal_frame(axis: Vec3) -> (Vec3, Vec3) {
    let helper = if axis.x.abs() < 0.9 {
        vec3(1.0, 0.0, 0.0)
    } else {
        vec3(0.0, 1.0, 0.0)
    };
    let u = axis.cross(helper).normalized(1e-14).expect("degenerate axis");
    let v = axis.cross(u);
    (u, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fibonacci_points_are_unit() {
        for p in fibonacci_sphere(500) {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fibonacci_covers_octants() {
        // Every octant of the sphere should receive samples.
        let pts = fibonacci_sphere(2000);
        let mut seen = [false; 8];
        for p in pts {
            let idx = (p.x > 0.0) as usize | ((p.y > 0.0) as usize) << 1 | ((p.z > 0.0) as usize) << 2;
            seen[idx] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn ball_samples_stay_inside_and_are_deterministic() {
        let c = vec3(1.0, -2.0, 0.5);
        let mut a = rng_for(42, 7);
        let mut b = rng_for(42, 7);
        for _ in 0..200 {
            let p = uniform_in_ball(&mut a, c, 2.5);
            let q = uniform_in_ball(&mut b, c, 2.5);
            assert!(p.dist(c) <= 2.5);
            assert_eq!(p.to_array(), q.to_array());
        }
    }

    #[test]
    fn frame_is_orthonormal() {
        let axis = vec3(0.3, -0.5, 0.81).normalized(1e-14).unwrap();
        let (u, v) = orthonormal_frame(axis);
        assert!(u.dot(axis).abs() < 1e-12);
        assert!(v.dot(axis).abs() < 1e-12);
        assert!(u.dot(v).abs() < 1e-12);
        assert!((u.norm() - 1.0).abs() < 1e-12);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }
}
