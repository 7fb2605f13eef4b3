//! Compiles and runs a small C program against the generated header and the
//! static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "ma_aircomp.h"

int main(void) {
    MaChannel *ch = NULL;
    if (ma_channel_sample(4, 5, 3.9, 250.0, 300.0, 7, &ch) != MA_STATUS_OK) return 1;
    double xy[4];
    if (ma_fpa_layout(2, 3.0, 0.5, xy, 4) != MA_STATUS_OK) return 2;
    MaCmse r;
    if (ma_evaluate_cmse(ch, xy, 2, 1e-8, 10.0, &r) != MA_STATUS_OK) return 3;
    if (!(r.cmse > 0.0 && r.cmse <= 4.0)) return 4;

    MaPsoConfig cfg = ma_pso_config_default();
    cfg.n_particles = 6;
    cfg.max_iter = 5;
    MaSolution *sol = NULL;
    if (ma_pso_run(ch, 2, &cfg, 1, &sol) != MA_STATUS_OK) return 5;
    if (ma_solution_cmse(sol) > r.cmse + 1e-12 && ma_solution_violations(sol) == 0) return 6;

    if (ma_channel_sample(0, 5, 3.9, 250.0, 300.0, 7, &ch) != MA_STATUS_INVALID_ARGUMENT) return 7;
    if (ma_last_error_message() == NULL) return 8;

    ma_solution_free(sol);
    ma_channel_free(ch);
    printf("ok\n");
    return 0;
}
"#;

#[test]
fn c_program_links_against_header() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler available; skipping");
        return;
    }
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test-binary>
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libma_aircomp_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());

    let work = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let src = work.join("ffi_smoke.c");
    let exe = work.join("ffi_smoke");
    std::fs::write(&src, PROGRAM).unwrap();

    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");

    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "C program exited with {:?}",
        out.status.code()
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
