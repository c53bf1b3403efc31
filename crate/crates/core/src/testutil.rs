//! Shared fixtures for unit tests.

use crate::event_model::{parse_event_table, EventTable, IngestConfig};

/// Eight events over four columns: X1 constant, X2 four pairs, X3 and X4
/// sparse with blanks.
pub fn tab3_csv() -> &'static str {
    "event,X1,X2,X3,X4\n\
     e1,A,B,F,\n\
     e2,A,B,F,H\n\
     e3,A,C,,H\n\
     e4,A,C,,\n\
     e5,A,D,G,\n\
     e6,A,D,G,I\n\
     e7,A,E,,I\n\
     e8,A,E,,\n"
}

pub fn tab3_table() -> EventTable {
    parse_event_table(tab3_csv().as_bytes(), &IngestConfig::default()).unwrap()
}
