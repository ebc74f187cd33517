//! Plain-text artifact writers: CSV, DOT and GeoJSON.

use std::io::Write;

use serde_json::json;

use crate::backbone::SourceSinkRanking;
use crate::error::{Error, Result};
use crate::geocluster::{ClusterModel, DensityCurve, SimilarityMatrix};
use crate::model::Catalog;
use crate::stats::{BinnedCurve, LifetimeCdf, SpreadHistogram, TrendSpreadStats};
use crate::trendsetters::{Classification, SetterFollowerCounts};

/// Weighted arcs as `src,dst,weight`.
pub fn write_edge_list<W: Write>(
    nodes: &[String],
    arcs: impl IntoIterator<Item = (usize, usize, f64)>,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["src", "dst", "weight"])?;
    for (i, j, weight) in arcs {
        w.serialize((&nodes[i], &nodes[j], weight))?;
    }
    w.flush().map_err(write_err)?;
    Ok(())
}

fn write_err(e: std::io::Error) -> Error {
    Error::Serialization(e.to_string())
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Directed graph in Graphviz DOT with weights as edge attributes.
pub fn write_dot<W: Write>(
    name: &str,
    nodes: &[String],
    arcs: impl IntoIterator<Item = (usize, usize, f64)>,
    mut writer: W,
) -> Result<()> {
    let io = write_err;
    writeln!(writer, "digraph {} {{", dot_id(name)).map_err(io)?;
    for n in nodes {
        writeln!(writer, "  {};", dot_id(n)).map_err(io)?;
    }
    for (i, j, w) in arcs {
        writeln!(
            writer,
            "  {} -> {} [weight={w}];",
            dot_id(&nodes[i]),
            dot_id(&nodes[j])
        )
        .map_err(io)?;
    }
    writeln!(writer, "}}").map_err(io)?;
    Ok(())
}

/// Arcs as a GeoJSON FeatureCollection of LineStrings between catalog
/// coordinates. Nodes missing from the catalog are skipped.
pub fn write_geojson<W: Write>(
    catalog: &Catalog,
    nodes: &[String],
    arcs: impl IntoIterator<Item = (usize, usize, f64)>,
    writer: W,
) -> Result<()> {
    let coord = |id: &str| {
        catalog.index_of(id).map(|k| {
            let l = catalog.get(k);
            [l.longitude, l.latitude]
        })
    };
    let features: Vec<_> = arcs
        .into_iter()
        .filter_map(|(i, j, weight)| {
            let (a, b) = (coord(&nodes[i])?, coord(&nodes[j])?);
            Some(json!({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": [a, b]},
                "properties": {"src": nodes[i], "dst": nodes[j], "weight": weight},
            }))
        })
        .collect();
    serde_json::to_writer_pretty(
        writer,
        &json!({"type": "FeatureCollection", "features": features}),
    )?;
    Ok(())
}

/// `loc,omega,s_in,s_out,rank`; `omega` is empty for isolated nodes.
pub fn write_ranking<W: Write>(ranking: &SourceSinkRanking, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["loc", "omega", "s_in", "s_out", "rank"])?;
    for e in &ranking.entries {
        w.serialize((&e.node, e.omega, e.s_in, e.s_out, e.rank))?;
    }
    w.flush().map_err(write_err)?;
    Ok(())
}

/// `loc,cluster`.
pub fn write_assignment<W: Write>(
    matrix: &SimilarityMatrix,
    model: &ClusterModel,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["loc", "cluster"])?;
    for (label, c) in matrix.labels.iter().zip(&model.assignment) {
        w.serialize((label, c))?;
    }
    w.flush().map_err(write_err)?;
    Ok(())
}

/// Full similarity matrix with a `loc` header column, for heat maps.
pub fn write_matrix<W: Write>(matrix: &SimilarityMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["loc".to_string()];
    header.extend(matrix.labels.iter().cloned());
    w.write_record(&header)?;
    for (label, row) in matrix.labels.iter().zip(matrix.rows()) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(write_err)?;
    Ok(())
}

/// `series,x,density`, one block per named curve.
pub fn write_kde<W: Write>(curves: &[(String, DensityCurve)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["series", "x", "density"])?;
    for (name, curve) in curves {
        for (x, d) in curve.x.iter().zip(&curve.density) {
            w.serialize((name, x, d))?;
        }
    }
    w.flush().map_err(write_err)?;
    Ok(())
}

/// `trend,kind,n_locations,lifetime_min,entropy_nats`.
pub fn write_stats<W: Write>(stats: &[TrendSpreadStats], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "trend",
        "kind",
        "n_locations",
        "lifetime_min",
        "entropy_nats",
    ])?;
    for s in stats {
        w.serialize((
            &s.name,
            s.kind.as_str(),
            s.n_locations,
            s.lifetime_min,
            s.entropy,
        ))?;
    }
    w.flush().map_err(write_err)?;
    Ok(())
}

/// `n_locations,count` for every count from 1 up.
pub fn write_histogram<W: Write>(hist: &SpreadHistogram, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["n_locations", "count"])?;
    for (k, &c) in hist.counts.iter().enumerate().skip(1) {
        w.serialize((k, c))?;
    }
    w.flush().map_err(write_err)?;
    Ok(())
}

/// `<x_name>,mean_lifetime_min,std_err,count`.
pub fn write_curve<W: Write>(curve: &BinnedCurve, x_name: &str, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([x_name, "mean_lifetime_min", "std_err", "count"])?;
    for i in 0..curve.len() {
        w.serialize((curve.x[i], curve.mean[i], curve.std_err[i], curve.counts[i]))?;
    }
    w.flush().map_err(write_err)?;
    Ok(())
}

/// `lifetime_min,cdf` at every step of the empirical CDF.
pub fn write_cdf<W: Write>(cdf: &LifetimeCdf, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["lifetime_min", "cdf"])?;
    for (x, p) in cdf.steps() {
        w.serialize((x, p))?;
    }
    w.flush().map_err(write_err)?;
    Ok(())
}

/// `loc,n_before,n_after,label`.
pub fn write_counts<W: Write>(
    counts: &SetterFollowerCounts,
    classes: &Classification,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["loc", "n_before", "n_after", "label"])?;
    for (c, label) in counts.cities.iter().zip(&classes.labels) {
        w.serialize((&c.id, c.n_before, c.n_after, label.to_string()))?;
    }
    w.flush().map_err(write_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Location;

    fn text(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn edge_list_and_dot() {
        let nodes = vec!["a".to_string(), "b c".to_string()];
        let arcs = vec![(0, 1, 2.5), (1, 0, 1.0)];
        assert_eq!(
            text(|b| write_edge_list(&nodes, arcs.clone(), b)),
            "src,dst,weight\na,b c,2.5\nb c,a,1.0\n"
        );
        let dot = text(|b| write_dot("net", &nodes, arcs, b));
        assert!(dot.starts_with("digraph \"net\" {\n"));
        assert!(dot.contains("  \"a\" -> \"b c\" [weight=2.5];\n"));
    }

    #[test]
    fn geojson_uses_lon_lat() {
        let catalog = Catalog::new(vec![
            Location::city("a", "A", 10.0, 20.0),
            Location::city("b", "B", 30.0, 40.0),
        ])
        .unwrap();
        let nodes = vec!["a".to_string(), "b".to_string()];
        let out = text(|b| write_geojson(&catalog, &nodes, vec![(0, 1, 3.0)], b));
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(
            v["features"][0]["geometry"]["coordinates"],
            json!([[20.0, 10.0], [40.0, 30.0]])
        );
        assert_eq!(v["features"][0]["properties"]["weight"], json!(3.0));
    }

    #[test]
    fn matrix_csv() {
        let m = SimilarityMatrix::new(vec!["x".into(), "y".into()], vec![1.0, 0.25, 0.25, 1.0])
            .unwrap();
        assert_eq!(
            text(|b| write_matrix(&m, b)),
            "loc,x,y\nx,1,0.25\ny,0.25,1\n"
        );
    }
}
