//! Short command-line forms of operators, data and domains.

use anyhow::{bail, Context};
use oscnh::domain::DomainSpec;
use oscnh::{Expr, NeumannData, OperatorSpec};

fn numbers(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse::<f64>().with_context(|| format!("not a number: {t:?}"))).collect()
}

fn pair(s: &str) -> anyhow::Result<(f64, f64)> {
    match numbers(s)?[..] {
        [a, b] => Ok((a, b)),
        _ => bail!("expected two comma-separated numbers, got {s:?}"),
    }
}

/// `laplacian`, `pucci+:λ,Λ`, `pucci-:λ,Λ`, or an operator as JSON.
pub fn operator(s: &str) -> anyhow::Result<OperatorSpec> {
    let s = s.trim();
    if s == "laplacian" {
        return Ok(OperatorSpec::laplacian());
    }
    if let Some(rest) = s.strip_prefix("pucci+:") {
        let (l, u) = pair(rest)?;
        return Ok(OperatorSpec::pucci_plus(l, u)?);
    }
    if let Some(rest) = s.strip_prefix("pucci-:") {
        let (l, u) = pair(rest)?;
        return Ok(OperatorSpec::pucci_minus(l, u)?);
    }
    let spec: OperatorSpec = serde_json::from_str(s).context("operator: expected laplacian, pucci+:l,L, pucci-:l,L or JSON")?;
    Ok(OperatorSpec::new(spec.kind, spec.lambda, spec.big_lambda)?)
}

/// `trig`, `const:v`, or an expression tree as JSON.
pub fn data(s: &str) -> anyhow::Result<Expr> {
    let s = s.trim();
    if s == "trig" {
        return Ok(NeumannData::standard_trig().g.source().clone());
    }
    if let Some(rest) = s.strip_prefix("const:") {
        return Ok(Expr::c(rest.trim().parse().context("const: expected a number")?));
    }
    serde_json::from_str(s).context("g: expected trig, const:v or a JSON expression")
}

/// `ellipse:a,b` or `annulus:r1,r2`.
pub fn domain(s: &str) -> anyhow::Result<DomainSpec> {
    if let Some(rest) = s.strip_prefix("ellipse:") {
        let (a, b) = pair(rest)?;
        return Ok(DomainSpec::ellipse(a, b));
    }
    if let Some(rest) = s.strip_prefix("annulus:") {
        let (r1, r2) = pair(rest)?;
        return Ok(DomainSpec::annulus(r1, r2));
    }
    bail!("domain: expected ellipse:a,b or annulus:r1,r2, got {s:?}")
}

/// Comma-separated reals; `1/8` style fractions are accepted.
pub fn real_list(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            match t.split_once('/') {
                Some((a, b)) => Ok(a.trim().parse::<f64>()? / b.trim().parse::<f64>()?),
                None => Ok(t.parse::<f64>()?),
            }
        })
        .collect::<anyhow::Result<Vec<_>>>()
        .with_context(|| format!("not a list of numbers: {s:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_forms() {
        assert_eq!(operator("laplacian").unwrap(), OperatorSpec::laplacian());
        assert_eq!(operator("pucci+:1,2").unwrap(), OperatorSpec::pucci_plus(1.0, 2.0).unwrap());
        assert!(operator("pucci+:2,1").is_err());
        assert_eq!(data("const:1.5").unwrap(), Expr::c(1.5));
        assert_eq!(domain("annulus:1,2").unwrap(), DomainSpec::annulus(1.0, 2.0));
        assert_eq!(real_list("1/8, 0.0625").unwrap(), vec![0.125, 0.0625]);
        assert!(domain("square:1").is_err());
    }
}
