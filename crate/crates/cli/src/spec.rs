//! Parsers for the compact command-line notations: grids, pairs and HTC samples.

use kms_core::analysis::log_grid;
use kms_core::model::ParameterSample;
use kms_core::{KmsError, Result};

/// `lo:hi:points`, logarithmically spaced.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || KmsError::Config(format!("grid '{s}': expected lo:hi:points"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    log_grid(lo, hi, n).map_err(|e| KmsError::Config(format!("grid '{s}': {e}")))
}

/// `i:j`, 1-based output and input indices.
pub fn parse_pair(s: &str, outputs: usize, inputs: usize) -> Result<(usize, usize)> {
    let bad = || KmsError::Config(format!("pair '{s}': expected output:input, 1-based"));
    let (i, j) = s.split_once(':').ok_or_else(bad)?;
    let i: usize = i.trim().parse().map_err(|_| bad())?;
    let j: usize = j.trim().parse().map_err(|_| bad())?;
    if i == 0 || j == 0 || i > outputs || j > inputs {
        return Err(KmsError::Config(format!(
            "pair '{s}' is outside the {outputs} outputs x {inputs} inputs of the model"
        )));
    }
    Ok((i - 1, j - 1))
}

/// HTC values used when no sample is given: `(1,8), (4,8), (4,1), (50,50)` W/(m²K) for
/// two patches; patch `k` takes the `k mod 2` entry otherwise.
pub fn default_samples(n_c: usize) -> Vec<ParameterSample> {
    const GRID: [[f64; 2]; 4] = [[1.0, 8.0], [4.0, 8.0], [4.0, 1.0], [50.0, 50.0]];
    let mut out: Vec<ParameterSample> = Vec::new();
    for g in GRID {
        let s = ParameterSample((0..n_c).map(|k| g[k % 2]).collect());
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Turns `patch=value` assignments into samples. Assignments accumulate into one sample
/// until a patch is assigned twice, which starts the next sample; one argument may hold
/// several assignments separated by commas. Every sample must set every patch.
pub fn parse_htc(args: &[String], patches: &[String]) -> Result<Vec<ParameterSample>> {
    if args.is_empty() {
        return Ok(default_samples(patches.len()));
    }
    let mut samples = Vec::new();
    let mut cur: Vec<Option<f64>> = vec![None; patches.len()];
    let finish = |cur: &mut Vec<Option<f64>>, samples: &mut Vec<ParameterSample>| -> Result<()> {
        if let Some(k) = cur.iter().position(Option::is_none) {
            return Err(KmsError::Config(format!(
                "HTC sample {} leaves patch '{}' unset",
                samples.len() + 1,
                patches[k]
            )));
        }
        samples.push(ParameterSample(cur.iter().map(|v| v.unwrap()).collect()));
        cur.iter_mut().for_each(|v| *v = None);
        Ok(())
    };
    for a in args.iter().flat_map(|a| a.split(',')) {
        let (name, value) = a
            .split_once('=')
            .ok_or_else(|| KmsError::Config(format!("HTC '{a}': expected patch=value")))?;
        let k = patches
            .iter()
            .position(|p| p == name.trim())
            .ok_or_else(|| KmsError::Config(format!("HTC '{a}': no convective patch named '{}'", name.trim())))?;
        let v: f64 = value
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| KmsError::Config(format!("HTC '{a}': value must be a nonnegative number")))?;
        if cur[k].is_some() {
            finish(&mut cur, &mut samples)?;
        }
        cur[k] = Some(v);
    }
    if patches.is_empty() {
        return Err(KmsError::Config(
            "HTC values given but the model has no convective patches".into(),
        ));
    }
    finish(&mut cur, &mut samples)?;
    Ok(samples)
}

/// File-name friendly sample label, `h_4_8`.
pub fn sample_tag(s: &ParameterSample) -> String {
    let mut t = String::from("h");
    for v in s.values() {
        t.push('_');
        t.push_str(&format!("{v}"));
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        vec!["top".into(), "bottom".into()]
    }

    #[test]
    fn grid_and_pairs() {
        let g = parse_grid("1e-5:1:200").unwrap();
        assert_eq!(g.len(), 200);
        assert!(parse_grid("1:1e-5:10").is_err());
        assert!(parse_grid("1e-5:1").is_err());
        assert_eq!(parse_pair("2:1", 3, 3).unwrap(), (1, 0));
        assert!(parse_pair("0:1", 3, 3).is_err());
        assert!(parse_pair("4:1", 3, 3).is_err());
    }

    #[test]
    fn htc_assignments_group_into_samples() {
        let a: Vec<String> = ["top=4", "bottom=8", "top=1,bottom=8"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let s = parse_htc(&a, &names()).unwrap();
        assert_eq!(
            s,
            vec![ParameterSample(vec![4.0, 8.0]), ParameterSample(vec![1.0, 8.0])]
        );
        assert!(parse_htc(&["top=4".into(), "top=5".into()], &names()).is_err());
        assert!(parse_htc(&["side=4".into()], &names()).is_err());
        assert!(parse_htc(&["top=-1".into()], &names()).is_err());
    }

    #[test]
    fn default_samples_follow_patch_count() {
        assert_eq!(default_samples(2).len(), 4);
        assert_eq!(default_samples(2)[0], ParameterSample(vec![1.0, 8.0]));
        assert_eq!(
            default_samples(1),
            vec![
                ParameterSample(vec![1.0]),
                ParameterSample(vec![4.0]),
                ParameterSample(vec![50.0])
            ]
        );
        assert_eq!(default_samples(0), vec![ParameterSample(vec![])]);
        assert_eq!(sample_tag(&ParameterSample(vec![4.0, 0.5])), "h_4_0.5");
    }
}
