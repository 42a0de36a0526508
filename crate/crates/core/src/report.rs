//! Serialised outputs: the path XML document and the CSV tables used for
//! plotting. Floats are written in shortest round-trip form, so parsing an
//! output back yields bit-identical values.

use std::fmt::Write as _;

use roxmltree::Document;
use thiserror::Error;

use crate::cost::{trace_edge, CostModel};
use crate::grid::Graph;
use crate::ocean::FlowEnvironment;
use crate::profiles::DiveProfile;
use crate::search::{Leg, PathResult};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed path document: {0}")]
    Xml(#[from] roxmltree::Error),

    #[error("path document: {0}")]
    Format(String),
}

/// Path as an XML document.
pub fn path_to_xml(path: &PathResult) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<path t0=\"{}\" arrival=\"{}\" total_time=\"{}\" legs=\"{}\">",
        path.t0,
        path.arrival,
        path.total_time(),
        path.legs.len()
    );
    for leg in &path.legs {
        let _ = writeln!(
            out,
            "  <leg from=\"{}\" to=\"{}\" x0=\"{}\" y0=\"{}\" x1=\"{}\" y1=\"{}\" departure=\"{}\" \
             travel_time=\"{}\" profile=\"{}\" climb_to=\"{}\" dive_to=\"{}\"/>",
            leg.from,
            leg.to,
            leg.start[0],
            leg.start[1],
            leg.end[0],
            leg.end[1],
            leg.departure,
            leg.travel_time,
            leg.profile.index,
            leg.profile.z_climb_to,
            leg.profile.z_dive_to,
        );
    }
    out.push_str("</path>\n");
    out
}

pub fn path_from_xml(text: &str) -> Result<PathResult, ReportError> {
    let doc = Document::parse(text)?;
    let root = doc.root_element();
    if root.tag_name().name() != "path" {
        return Err(ReportError::Format("root element must be <path>".into()));
    }
    let t0 = attr(root, "t0")?;
    let arrival = attr(root, "arrival")?;
    let mut legs = Vec::new();
    for node in root.children().filter(|n| n.is_element()) {
        if node.tag_name().name() != "leg" {
            return Err(ReportError::Format(format!(
                "unexpected element <{}>",
                node.tag_name().name()
            )));
        }
        legs.push(Leg {
            from: attr(node, "from")?,
            to: attr(node, "to")?,
            start: [attr(node, "x0")?, attr(node, "y0")?],
            end: [attr(node, "x1")?, attr(node, "y1")?],
            departure: attr(node, "departure")?,
            travel_time: attr(node, "travel_time")?,
            profile: DiveProfile {
                index: attr(node, "profile")?,
                z_climb_to: attr(node, "climb_to")?,
                z_dive_to: attr(node, "dive_to")?,
            },
        });
    }
    let declared: usize = attr(root, "legs")?;
    if declared != legs.len() {
        return Err(ReportError::Format(format!(
            "declares {declared} legs but contains {}",
            legs.len()
        )));
    }
    Ok(PathResult { t0, legs, arrival })
}

fn attr<T: std::str::FromStr>(node: roxmltree::Node, name: &str) -> Result<T, ReportError> {
    let raw = node
        .attribute(name)
        .ok_or_else(|| ReportError::Format(format!("<{}> lacks `{name}`", node.tag_name().name())))?;
    raw.parse()
        .map_err(|_| ReportError::Format(format!("`{name}` has unparsable value `{raw}`")))
}

/// `t,x,y` at every node of the path.
pub fn path_to_csv(path: &PathResult) -> String {
    let mut out = String::from("t,x,y\n");
    for (t, x, y) in path.waypoints() {
        let _ = writeln!(out, "{t},{x},{y}");
    }
    out
}

/// Per-step trace of every leg flown with its chosen profile:
/// `leg,profile,t,s,x,y,z,u,v,g`.
/// Legs whose edge is missing from `graph` are skipped.
pub fn path_trace_csv(path: &PathResult, graph: &Graph, model: &CostModel) -> String {
    let mut out = String::from("leg,profile,t,s,x,y,z,u,v,g\n");
    for (i, leg) in path.legs.iter().enumerate() {
        let Some(edge) = graph.edges_from(leg.from).iter().find(|e| e.to == leg.to) else {
            continue;
        };
        let segment = graph.segment(edge);
        let (steps, _) = trace_edge(
            &segment,
            leg.departure,
            &leg.profile,
            &model.env,
            &model.vehicle,
            &model.integration,
        );
        for s in steps {
            let _ = writeln!(
                out,
                "{i},{},{},{},{},{},{},{},{},{}",
                leg.profile.index, s.t, s.s, s.x, s.y, s.z, s.current.u, s.current.v, s.ground_speed
            );
        }
    }
    out
}

/// `index,z_climb_to,z_dive_to`.
pub fn profiles_csv(profiles: &[DiveProfile]) -> String {
    let mut out = String::from("index,z_climb_to,z_dive_to\n");
    for p in profiles {
        let _ = writeln!(out, "{},{},{}", p.index, p.z_climb_to, p.z_dive_to);
    }
    out
}

/// Samples the field at every `(t, z)` combination over the given points:
/// `t,x,y,z,u,v`. Depths must be non-negative.
pub fn field_csv(
    env: &FlowEnvironment,
    points: &[[f64; 2]],
    times: &[f64],
    depths: &[f64],
) -> Result<String, crate::ocean::FlowError> {
    let mut out = String::from("t,x,y,z,u,v\n");
    for &t in times {
        for &z in depths {
            for &[x, y] in points {
                let s = env.velocity(x, y, z, t)?;
                let _ = writeln!(out, "{t},{x},{y},{z},{},{}", s.u, s.v);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn leg_strategy() -> impl Strategy<Value = Leg> {
        (
            0usize..500,
            0usize..500,
            prop::array::uniform4(-10.0..10.0f64),
            0.0..100.0f64,
            1e-3..10.0f64,
            0usize..20,
            0.0..40.0f64,
            50.0..200.0f64,
        )
            .prop_map(|(from, to, xy, departure, travel_time, index, c, d)| Leg {
                from,
                to,
                start: [xy[0], xy[1]],
                end: [xy[2], xy[3]],
                departure,
                travel_time,
                profile: DiveProfile {
                    index,
                    z_climb_to: c,
                    z_dive_to: d,
                },
            })
    }

    proptest! {
        #[test]
        fn path_xml_round_trips(t0 in -5.0..50.0f64, legs in prop::collection::vec(leg_strategy(), 0..8)) {
            let arrival = legs.iter().fold(t0, |t, l| t + l.travel_time);
            let path = PathResult { t0, legs, arrival };
            let parsed = path_from_xml(&path_to_xml(&path)).unwrap();
            prop_assert_eq!(parsed, path);
        }
    }

    #[test]
    fn bad_path_documents() {
        assert!(path_from_xml("").is_err());
        assert!(path_from_xml("<route/>").is_err());
        assert!(path_from_xml(r#"<path t0="0" arrival="1" legs="1"></path>"#).is_err());
        assert!(path_from_xml(r#"<path t0="x" arrival="1" legs="0"></path>"#).is_err());
    }

    #[test]
    fn field_rows_and_surface_term() {
        let env = FlowEnvironment::default();
        let points = [[0.0, 0.0], [1.0, 0.5], [2.0, -1.0]];
        let csv = field_csv(&env, &points, &[0.0, 1.0], &[0.0, 20.0]).unwrap();
        assert_eq!(csv.lines().count(), 1 + 3 * 2 * 2);
        let row = csv.lines().nth(1).unwrap();
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        // t = 0, z = 0: cos(dωt) = 1 adds the full +0.5 surface term
        let jet = env.jet.velocity(0.0, 0.0, 0.0);
        assert_eq!(cols[4], jet.u + 0.5);
        assert!(field_csv(&env, &points, &[0.0], &[-1.0]).is_err());
    }
}
