use std::path::PathBuf;
use std::process::Command;

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include").join("jetcarnot.h")
}

fn compile(lang: &str, std: &str, src: &str) {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join(if lang == "c" { "t.c" } else { "t.cpp" });
    std::fs::write(&file, src).unwrap();
    let out = Command::new("cc")
        .args(["-x", lang, std, "-fsyntax-only", "-Wall", "-Wextra", "-Werror", "-pedantic"])
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&file)
        .output()
        .expect("a C compiler named cc is required");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

const USE_API: &str = r#"
#include "jetcarnot.h"
int use_api(void) {
    double coords[3] = {0.0, 0.0, 1.0};
    JcJetPoint *p = NULL;
    JcOptimizerOpts o = jc_optimizer_opts_default();
    char buf[64];
    size_t dim = 0;
    if (jc_jet_dim(1, 1, &dim) != JC_STATUS_OK) return 1;
    if (jc_jet_point_new(1, 1, coords, 3, &p) != JC_STATUS_OK) {
        jc_last_error_message(buf, sizeof buf);
        return 1;
    }
    o.steps = 16;
    jc_jet_point_free(p);
    return (int)o.steps;
}
"#;

#[test]
fn header_compiles_as_c99() {
    compile("c", "-std=c99", USE_API);
}

#[test]
fn header_compiles_as_cxx() {
    compile("c++", "-std=c++11", USE_API);
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header()).unwrap();
    let src = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("src").join("lib.rs")).unwrap();
    let exports: Vec<&str> = ["pub unsafe extern \"C\" fn ", "pub extern \"C\" fn "]
        .iter()
        .flat_map(|marker| src.split(marker).skip(1))
        .filter_map(|s| s.split('(').next())
        .filter(|name| name.starts_with("jc_"))
        .collect();
    assert!(exports.len() >= 20, "found {} exports", exports.len());
    for name in exports {
        assert!(h.contains(&format!("{name}(")), "{name} missing from header");
    }
    for handle in ["JcJetPoint", "JcField", "JcBoundarySpec"] {
        assert!(h.contains(&format!("typedef struct {handle} {handle};")), "{handle} is not opaque");
    }
}
