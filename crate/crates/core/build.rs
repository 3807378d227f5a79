fn main() {
    // Hermitian eigendecompositions run on the system LAPACK (zheev).
    println!("cargo:rustc-link-lib=dylib=openblas");
}
