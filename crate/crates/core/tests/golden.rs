//! Emitted text is compared against checked-in files. Refresh them with
//! `UPDATE_GOLDEN=1 cargo test -p hbm-stencil --test golden`.

use std::path::PathBuf;

use hbm_stencil::analysis::derive_params;
use hbm_stencil::codegen::{emit_host, emit_kernel, CodegenPlan};
use hbm_stencil::corpus;
use hbm_stencil::model::{ParallelismConfig, Variant};

fn check(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == actual, "{name} differs from golden copy; rerun with UPDATE_GOLDEN=1 if intended");
}

fn golden(stem: &str, variant: Variant, k: u32, s: u32) {
    let platform = corpus::u280_like();
    let program = corpus::kernel(stem).unwrap();
    let platform = platform.for_kernel(&program.kernel_name);
    let params = derive_params(&program, &platform).unwrap();
    let config = ParallelismConfig::new(variant, k, s, platform.banks_per_pe(program.inputs.len()));
    let plan = CodegenPlan::new(&program, &params, &config, &platform).unwrap();
    let stem = plan.file_stem();
    check(&format!("{stem}.kernel.cpp.txt"), &emit_kernel(&plan));
    check(&format!("{stem}.host.cpp.txt"), &emit_host(&plan));
}

#[test]
fn jacobi2d_hybrid_s() {
    golden("jacobi2d", Variant::HybridS, 3, 2);
}

#[test]
fn blur_jacobi2d_temporal() {
    golden("blur-jacobi2d", Variant::Temporal, 1, 3);
}

#[test]
fn hotspot_spatial_s() {
    golden("hotspot", Variant::SpatialS, 2, 1);
}

#[test]
fn heat3d_hybrid_r() {
    golden("heat3d", Variant::HybridR, 3, 2);
}
