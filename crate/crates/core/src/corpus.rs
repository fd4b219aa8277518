//! Bundled benchmark kernels and platform profile.

use crate::dsl::{parse, StencilProgram};
use crate::model::PlatformSpec;

/// File stem and source of every bundled kernel.
pub const KERNELS: &[(&str, &str)] = &[
    ("jacobi2d", include_str!("../corpus/jacobi2d.dsl")),
    ("jacobi3d", include_str!("../corpus/jacobi3d.dsl")),
    ("blur", include_str!("../corpus/blur.dsl")),
    ("seidel2d", include_str!("../corpus/seidel2d.dsl")),
    ("dilate", include_str!("../corpus/dilate.dsl")),
    ("hotspot", include_str!("../corpus/hotspot.dsl")),
    ("heat3d", include_str!("../corpus/heat3d.dsl")),
    ("sobel2d", include_str!("../corpus/sobel2d.dsl")),
    ("blur-jacobi2d", include_str!("../corpus/blur-jacobi2d.dsl")),
];

/// The eight benchmark kernels (everything but the combined example).
pub const BENCHMARKS: &[&str] = &["jacobi2d", "jacobi3d", "blur", "seidel2d", "dilate", "hotspot", "heat3d", "sobel2d"];

pub const U280_LIKE: &str = include_str!("../corpus/alveo-u280-like.toml");

pub fn source(stem: &str) -> Option<&'static str> {
    KERNELS.iter().find(|(n, _)| *n == stem).map(|(_, s)| *s)
}

/// Parses a bundled kernel. Panics only if the bundled text is broken,
/// which the corpus tests rule out.
pub fn kernel(stem: &str) -> Option<StencilProgram> {
    source(stem).map(|s| parse(s).unwrap_or_else(|e| panic!("bundled kernel {stem}: {e}")))
}

pub fn u280_like() -> PlatformSpec {
    PlatformSpec::from_toml(U280_LIKE).expect("bundled platform parses")
}
