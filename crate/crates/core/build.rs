// Dense eigensolvers go through the system LAPACK/BLAS (OpenBLAS on most
// distributions). Override the library names with SSHH_LAPACK_LIBS, e.g.
// `SSHH_LAPACK_LIBS=openblas`.
fn main() {
    println!("cargo:rerun-if-env-changed=SSHH_LAPACK_LIBS");
    let libs = std::env::var("SSHH_LAPACK_LIBS").unwrap_or_else(|_| "lapack,blas".to_string());
    for lib in libs.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        println!("cargo:rustc-link-lib={lib}");
    }
}
