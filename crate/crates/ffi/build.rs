fn main() {
    let dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    cbindgen::generate(&dir)
        .expect("cbindgen failed")
        .write_to_file(format!("{dir}/include/sumset.h"));
}
