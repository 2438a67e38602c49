use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Die, PlaceError, Placement};
use crate::fabric::{builtin_fabric, FabricKind};
use crate::netlist::Netlist;

/// Sidecar for `placement.csv`: die geometry plus the fabric it was
/// placed for.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementMeta {
    pub die: Die,
    pub fabric: FabricKind,
    pub design: String,
    pub pin_access_layers: u32,
}

pub fn write_placement_csv(netlist: &Netlist, placement: &Placement) -> String {
    let mut out = String::from("cell,x,y\n");
    for (c, &(x, y)) in netlist.cells.iter().zip(&placement.positions) {
        let _ = writeln!(out, "{},{},{}", c.id, x, y);
    }
    out
}

pub fn write_placement_meta(meta: &PlacementMeta) -> String {
    format!(
        "design {}\nfabric {}\nwidth {}\nheight {}\nsite_nm {}\nutilization {}\npin_layers {}\n",
        meta.design,
        meta.fabric,
        meta.die.width,
        meta.die.height,
        meta.die.site_nm,
        meta.die.utilization,
        meta.pin_access_layers
    )
}

fn bad(path: &str, line: usize, msg: impl Into<String>) -> PlaceError {
    PlaceError::Format {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

pub fn parse_placement_meta(text: &str, path: &str) -> Result<PlacementMeta, PlaceError> {
    let mut kv: HashMap<&str, (usize, &str)> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| bad(path, i + 1, "expected `<key> <value>`"))?;
        if kv.insert(k, (i + 1, v.trim())).is_some() {
            return Err(bad(path, i + 1, format!("duplicate key `{k}`")));
        }
    }
    fn get<'a>(
        kv: &HashMap<&str, (usize, &'a str)>,
        path: &str,
        k: &str,
    ) -> Result<(usize, &'a str), PlaceError> {
        kv.get(k)
            .copied()
            .ok_or_else(|| bad(path, 0, format!("missing `{k}`")))
    }
    fn num<T: std::str::FromStr>(
        kv: &HashMap<&str, (usize, &str)>,
        path: &str,
        k: &str,
    ) -> Result<T, PlaceError> {
        let (ln, v) = get(kv, path, k)?;
        v.parse()
            .map_err(|_| bad(path, ln, format!("bad {k} `{v}`")))
    }
    let (fl, fv) = get(&kv, path, "fabric")?;
    let fabric = fv.parse().map_err(|e: String| bad(path, fl, e))?;
    let die = Die {
        width: num(&kv, path, "width")?,
        height: num(&kv, path, "height")?,
        site_nm: num(&kv, path, "site_nm")?,
        utilization: num(&kv, path, "utilization")?,
    };
    if die.width == 0
        || die.height == 0
        || !(die.site_nm > 0.0)
        || !(die.utilization > 0.0 && die.utilization <= 1.0)
    {
        return Err(bad(path, 0, "die geometry out of range"));
    }
    let design = kv
        .get("design")
        .map_or_else(String::new, |(_, v)| v.to_string());
    let pin_access_layers = match kv.contains_key("pin_layers") {
        true => num(&kv, path, "pin_layers")?,
        false => builtin_fabric(fabric).pin_access_layer_count() as u32,
    };
    Ok(PlacementMeta {
        die,
        fabric,
        design,
        pin_access_layers,
    })
}

/// Reads `cell,x,y` rows for every cell of `netlist`. Legality is not
/// checked here; see [`super::check_legal`].
pub fn read_placement(
    csv: &str,
    path: &str,
    die: Die,
    netlist: &Netlist,
) -> Result<Placement, PlaceError> {
    let index: HashMap<&str, usize> = netlist
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| (c.id.as_str(), i))
        .collect();
    let mut positions: Vec<Option<(u32, u32)>> = vec![None; netlist.cells.len()];
    let mut lines = csv.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "cell,x,y" => {}
        _ => return Err(bad(path, 1, "expected header `cell,x,y`")),
    }
    for (i, raw) in lines {
        let ln = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(bad(path, ln, "expected 3 fields"));
        }
        let &ci = index
            .get(f[0])
            .ok_or_else(|| bad(path, ln, format!("unknown cell `{}`", f[0])))?;
        let x = f[1]
            .parse()
            .map_err(|_| bad(path, ln, format!("bad x `{}`", f[1])))?;
        let y = f[2]
            .parse()
            .map_err(|_| bad(path, ln, format!("bad y `{}`", f[2])))?;
        if positions[ci].replace((x, y)).is_some() {
            return Err(bad(path, ln, format!("cell `{}` listed twice", f[0])));
        }
    }
    let positions = positions
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| PlaceError::Unplaced(netlist.cells[i].id.clone())))
        .collect::<Result<_, _>>()?;
    Ok(Placement { die, positions })
}

#[cfg(test)]
mod tests {
    use super::super::tests::chain;
    use super::*;

    #[test]
    fn round_trip() {
        let nl = chain(3);
        let die = Die {
            width: 4,
            height: 2,
            site_nm: 200.0,
            utilization: 0.6,
        };
        let p = Placement {
            die,
            positions: vec![(0, 0), (3, 1), (1, 0)],
        };
        let meta = PlacementMeta {
            die,
            fabric: FabricKind::Planar2D,
            design: "chain".into(),
            pin_access_layers: 1,
        };
        let m = parse_placement_meta(&write_placement_meta(&meta), "m").unwrap();
        assert_eq!(m, meta);
        let back = read_placement(&write_placement_csv(&nl, &p), "p", m.die, &nl).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn errors_name_the_line() {
        let nl = chain(2);
        let die = Die {
            width: 4,
            height: 2,
            site_nm: 200.0,
            utilization: 0.6,
        };
        let e = read_placement("cell,x,y\nc0,0,0\nc9,1,1\n", "p.csv", die, &nl).unwrap_err();
        assert_eq!(e.to_string(), "p.csv:3: unknown cell `c9`");
        assert!(matches!(
            read_placement("cell,x,y\nc0,0,0\n", "p", die, &nl),
            Err(PlaceError::Unplaced(_))
        ));
        assert!(parse_placement_meta("fabric 2d\nwidth 3\n", "m").is_err());
    }
}
