pub mod arith;
pub mod charsum;
pub mod criteria;
pub mod freeness;
pub mod field;
pub mod hp;
pub mod par;
pub mod poly;
pub mod search;
pub mod tables;
pub mod util;
