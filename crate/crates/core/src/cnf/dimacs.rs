use std::fmt::Write as _;

use super::formula::CnfFormula;
use super::lit::Lit;
use super::CnfError;

pub fn to_dimacs(f: &CnfFormula) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "p cnf {} {}", f.num_vars, f.clauses.len());
    for c in &f.clauses {
        for l in c {
            let _ = write!(s, "{} ", l.to_dimacs());
        }
        s.push_str("0\n");
    }
    s
}

pub fn parse_dimacs(text: &str) -> Result<CnfFormula, CnfError> {
    let mut f = CnfFormula::new();
    let mut cur: Vec<Lit> = Vec::new();
    let mut declared = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 3 || parts[0] != "cnf" {
                return Err(CnfError::Dimacs(i + 1, "bad header".into()));
            }
            let v: u32 = parts[1].parse().map_err(|_| CnfError::Dimacs(i + 1, "bad var count".into()))?;
            f.num_vars = v;
            declared = Some(parts[2].parse::<usize>().map_err(|_| CnfError::Dimacs(i + 1, "bad clause count".into()))?);
            continue;
        }
        for tok in line.split_whitespace() {
            let x: i64 = tok
                .parse()
                .map_err(|_| CnfError::Dimacs(i + 1, format!("bad literal '{tok}'")))?;
            if x == 0 {
                f.clauses.push(std::mem::take(&mut cur));
            } else {
                let l = Lit::from_dimacs(x);
                f.num_vars = f.num_vars.max(l.var().0 + 1);
                cur.push(l);
            }
        }
    }
    if !cur.is_empty() {
        f.clauses.push(cur);
    }
    if let Some(n) = declared {
        if n != f.clauses.len() {
            return Err(CnfError::Dimacs(0, format!("header declares {n} clauses, found {}", f.clauses.len())));
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let f = parse_dimacs("c x\np cnf 3 2\n1 -2 0\n3 0\n").unwrap();
        assert_eq!(f.num_vars, 3);
        let text = to_dimacs(&f);
        assert!(text.starts_with("p cnf 3 2\n"));
        assert_eq!(parse_dimacs(&text).unwrap().clauses, f.clauses);
    }
}
