//! Compiles emitted sources with the host C++ compiler and runs them on
//! input vectors.

use std::path::{Path, PathBuf};
use std::process::Command;

use tinyclf_core::eval::harness::{write_vectors_csv, HarnessRun, SectionSizes};
use tinyclf_core::{GeneratedSource, NumericMode};

pub const CXX_FLAGS: &[&str] = &["-std=c++11", "-O2", "-Wall", "-Wextra", "-Werror", "-ffp-contract=off"];

pub fn compiler_available() -> bool {
    Command::new("g++")
        .arg("--version")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn driver(prefix: &str, mode: NumericMode, n_features: usize, n_classes: usize, hook: bool) -> String {
    let (elem, convert, print) = match mode {
        NumericMode::Flt => (
            "float".to_string(),
            "v".to_string(),
            "printf(\" %.9g\", (double)out[i]);",
        ),
        NumericMode::Fxp(_) => (
            format!("{prefix}_fxp_t"),
            format!("{prefix}_to_fixed(v)"),
            "printf(\" %ld\", (long)out[i]);",
        ),
    };
    let scores = if hook {
        format!(
            "{elem} out[{n_classes}];\n        int i;\n        {prefix}_scores(x, out);\n        \
             for (i = 0; i < {n_classes}; ++i) {print}"
        )
    } else {
        String::new()
    };
    format!(
        r#"#include <stdio.h>
#include <stdlib.h>
#include "model.cpp"

int main(int argc, char** argv) {{
    FILE* f;
    (void)argc;
    f = fopen(argv[1], "r");
    if (!f) return 2;
    for (;;) {{
        {elem} x[{n_features}];
        int j;
        for (j = 0; j < {n_features}; ++j) {{
            float v;
            if (fscanf(f, j == 0 ? " %f" : " ,%f", &v) != 1) return 0;
            x[j] = {convert};
        }}
        printf("%d", (int){prefix}_classify(x));
        {{
        {scores}
        }}
        printf("\n");
    }}
}}
"#
    )
}

fn run(cmd: &mut Command) -> Result<String, String> {
    let out = cmd.output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{:?} failed\n{}{}",
            cmd,
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Sizes of `prefix`-named read-only symbols plus the `size` totals of an
/// unoptimized object (so no parameter array is folded away).
fn measure(dir: &Path, source: &Path, prefix: &str) -> Result<SectionSizes, String> {
    let obj = dir.join("model_o0.o");
    run(Command::new("g++")
        .args(["-std=c++11", "-O0", "-c"])
        .arg(source)
        .arg("-o")
        .arg(&obj))?;
    let nm = run(Command::new("nm").args(["-S", "-C", "--defined-only"]).arg(&obj))?;
    let mut rodata = 0;
    for line in nm.lines() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if let [_, size, kind, name] = parts[..] {
            if (kind == "r" || kind == "R") && name.starts_with(&format!("{prefix}_")) {
                rodata += u64::from_str_radix(size, 16).map_err(|e| e.to_string())?;
            }
        }
    }
    let size = run(Command::new("size").arg(&obj))?;
    let totals: Vec<u64> = size
        .lines()
        .nth(1)
        .ok_or("no size output")?
        .split_whitespace()
        .take(3)
        .map(|t| t.parse().unwrap_or(0))
        .collect();
    Ok(SectionSizes {
        text: totals[0],
        data: totals[1],
        bss: totals[2],
        rodata: Some(rodata),
    })
}

pub struct Compiled {
    pub run: HarnessRun,
    pub dir: tempfile::TempDir,
}

/// Compiles `src`, runs it on `vectors` and parses predictions and scores.
pub fn compile_and_run(
    src: &GeneratedSource,
    n_features: usize,
    n_classes: usize,
    vectors: &[Vec<f64>],
) -> Result<Compiled, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let prefix = &src.options_echo.symbol_prefix;
    let hook = src.options_echo.emit_test_hook;
    let source = dir.path().join("model.cpp");
    std::fs::write(&source, &src.text).map_err(|e| e.to_string())?;
    let main = dir.path().join("main.cpp");
    std::fs::write(
        &main,
        driver(prefix, src.options_echo.mode, n_features, n_classes, hook),
    )
    .map_err(|e| e.to_string())?;
    let vectors_path = dir.path().join("vectors.csv");
    let mut buf = Vec::new();
    write_vectors_csv(&mut buf, vectors).map_err(|e| e.to_string())?;
    std::fs::write(&vectors_path, buf).map_err(|e| e.to_string())?;

    let exe: PathBuf = dir.path().join("model");
    run(Command::new("g++")
        .args(CXX_FLAGS)
        .arg("-I")
        .arg(dir.path())
        .arg(&main)
        .arg("-o")
        .arg(&exe))?;
    let out = run(Command::new(&exe).arg(&vectors_path))?;
    let mut predictions = Vec::new();
    let mut raw_scores = Vec::new();
    for line in out.lines() {
        let mut it = line.split_whitespace();
        predictions.push(
            it.next()
                .ok_or("empty line")?
                .parse()
                .map_err(|_| format!("bad line {line}"))?,
        );
        raw_scores.push(it.map(|t| t.parse::<f64>().expect("numeric score")).collect::<Vec<_>>());
    }
    let sizes = measure(dir.path(), &source, prefix)?;
    Ok(Compiled {
        run: HarnessRun {
            source_path: source.display().to_string(),
            vectors_path: vectors_path.display().to_string(),
            predictions,
            raw_scores: hook.then_some(raw_scores),
            sizes,
        },
        dir,
    })
}
