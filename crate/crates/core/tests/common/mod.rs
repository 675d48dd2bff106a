#![allow(dead_code)]

use itos::inpainting::{make_mask, InpaintingProblem};
use itos::rng::Stream;
use itos::Point;

pub fn random_matrix(s: &mut Stream, rows: usize, cols: usize, scale: f64) -> Point {
    Point::from_fn(rows, cols, |_, _| s.uniform_in(-scale, scale))
}

pub fn inner(a: &Point, b: &Point) -> f64 {
    a.dot(b)
}

/// 8×8 inpainting instance with a random image, 40% missing, `μ = 0.1`.
pub fn small_inpainting(seed: u64) -> InpaintingProblem {
    let mut s = Stream::new(seed, 7);
    let u = Point::from_fn(8, 8, |_, _| s.uniform());
    InpaintingProblem::new(&u, make_mask((8, 8), 0.4, seed), 0.1).unwrap()
}
