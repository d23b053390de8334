use std::env;
use std::fs;
use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "resdac.h"

int main(void) {
    ResdacConfig *cfg = NULL;
    ResdacTrace *trace = NULL;
    ResdacBounds bounds;
    double eps = 0.0;
    if (resdac_config_preset("scenario1", &cfg) != RESDAC_STATUS_OK) return 10;
    if (resdac_config_set_horizon(cfg, 120) != RESDAC_STATUS_OK) return 11;
    if (resdac_run(cfg, &trace) != RESDAC_STATUS_OK) return 12;
    if (resdac_trace_bounds(trace, &bounds) != RESDAC_STATUS_OK) return 13;
    if (bounds.n != 7 || bounds.envelope_violations != 0) return 14;
    if (resdac_config_preset("missing", &cfg) != RESDAC_STATUS_OUT_OF_RANGE) return 15;
    if (resdac_last_error_message() == NULL) return 16;
    if (resdac_epsilon_bound(3, 0.1, 1.0 / 3.0, 0.0, 0.0, &eps) != RESDAC_STATUS_OK) return 17;
    printf("%.6f\n", eps);
    resdac_trace_free(trace);
    resdac_config_free(cfg);
    return 0;
}
"#;

#[test]
fn header_compiles_and_links() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/resdac.h");
    let text = fs::read_to_string(&header).unwrap();
    for symbol in [
        "resdac_run",
        "resdac_trace_state",
        "resdac_config_free",
        "RESDAC_STATUS_PANIC",
    ] {
        assert!(text.contains(symbol), "{symbol} missing from header");
    }

    // Test executables live in <target>/<profile>/deps; the static library one level up.
    let profile_dir = env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libresdac_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());

    let work = tempfile::tempdir().unwrap();
    let source = work.path().join("smoke.c");
    let binary = work.path().join("smoke");
    fs::write(&source, PROGRAM).unwrap();
    let cc = env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&source)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&binary)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&binary).output().unwrap();
    assert!(
        out.status.success(),
        "smoke program exited with {:?}",
        out.status.code()
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "48.800000");
}
