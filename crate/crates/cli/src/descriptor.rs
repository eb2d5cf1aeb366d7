//! Utility descriptors: compact strings selecting a member of the utility
//! family, e.g. `isoelastic:p=-1`, `log`, `shifted:p=-1,a=1`,
//! `twopiece:p=-1,pstar=-3,xhi=6`, `incentive:p=0.5,c1=1,c2=2,legs=3@4`.
//! Option legs are `quantity@strike` pairs joined with `+`.

use longrun::utility::{Contract, InterpolationSpec, OptionLeg, UtilitySpec};
use std::collections::BTreeMap;

pub fn parse_utility(desc: &str) -> Result<UtilitySpec, String> {
    let (kind, rest) = match desc.split_once(':') {
        Some((k, r)) => (k.trim(), r.trim()),
        None => (desc.trim(), ""),
    };
    let fields = parse_fields(rest)?;
    let get = |key: &str| -> Result<f64, String> {
        fields
            .get(key)
            .ok_or_else(|| format!("descriptor '{desc}' is missing '{key}'"))?
            .parse::<f64>()
            .map_err(|_| format!("'{key}' in '{desc}' is not a number"))
    };
    let get_or = |key: &str, default: f64| -> Result<f64, String> {
        match fields.get(key) {
            Some(v) => v.parse::<f64>().map_err(|_| format!("'{key}' in '{desc}' is not a number")),
            None => Ok(default),
        }
    };
    match kind {
        "log" => Ok(UtilitySpec::logarithmic()),
        "isoelastic" => UtilitySpec::isoelastic(get("p")?).map_err(|e| e.to_string()),
        "shifted" => {
            UtilitySpec::shifted_power(get("p")?, get("a")?).map_err(|e| e.to_string())
        }
        "twopiece" => UtilitySpec::two_piece_power(
            get("p")?,
            get("pstar")?,
            InterpolationSpec::concave_power(get_or("xhi", 6.0)?),
        )
        .map_err(|e| e.to_string()),
        "incentive" => {
            let legs = match fields.get("legs") {
                Some(s) if !s.is_empty() => parse_legs(s)?,
                _ => Vec::new(),
            };
            let contract = Contract::new(get_or("c1", 0.0)?, get("c2")?, legs)
                .map_err(|e| e.to_string())?;
            UtilitySpec::incentivized(get("p")?, contract).map_err(|e| e.to_string())
        }
        other => Err(format!(
            "unknown utility kind '{other}' (expected isoelastic, log, shifted, twopiece, incentive)"
        )),
    }
}

fn parse_fields(rest: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    if rest.is_empty() {
        return Ok(map);
    }
    for part in rest.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got '{part}'"))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn parse_legs(s: &str) -> Result<Vec<OptionLeg>, String> {
    s.split('+')
        .map(|leg| {
            let (q, k) = leg
                .split_once('@')
                .ok_or_else(|| format!("option leg '{leg}' must be quantity@strike"))?;
            Ok(OptionLeg {
                quantity: q.trim().parse().map_err(|_| format!("bad quantity in '{leg}'"))?,
                strike: k.trim().parse().map_err(|_| format!("bad strike in '{leg}'"))?,
            })
        })
        .collect()
}
