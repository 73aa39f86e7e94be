//! Optional newline-delimited JSON event trace.

use std::io::Write;

use serde_json::{json, Value};

use crate::net::{Frame, Priority};
use crate::sim::SimTime;

pub struct Trace {
    out: Box<dyn Write>,
}

impl Trace {
    pub fn new(out: Box<dyn Write>) -> Self {
        Trace { out }
    }

    pub fn record(&mut self, t: SimTime, ev: &str, mut fields: Value) -> std::io::Result<()> {
        if let Value::Object(map) = &mut fields {
            map.insert("t".into(), json!(t.as_nanos()));
            map.insert("ev".into(), json!(ev));
        }
        serde_json::to_writer(&mut self.out, &fields)?;
        self.out.write_all(b"\n")
    }

    pub fn frame<B>(
        &mut self,
        t: SimTime,
        ev: &str,
        frame: &Frame<B>,
        node: &str,
        port: Option<u32>,
    ) -> std::io::Result<()> {
        let prio = match frame.priority {
            Priority::RtsClassA => "class_a",
            Priority::BestEffort => "best_effort",
        };
        self.record(
            t,
            ev,
            json!({
                "frame": frame.id.0,
                "kind": frame.kind.as_str(),
                "priority": prio,
                "size": frame.size_bytes,
                "node": node,
                "port": port,
                "created": frame.created_at.as_nanos(),
            }),
        )
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}
