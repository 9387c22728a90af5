pub mod clonecli;
pub mod cparse;
pub mod eventgraph;
pub mod model;
pub mod numkernel;
pub mod train;
