pub mod asymptotics;
pub mod augmented;
pub mod charpoly;
pub mod hyperbolicity;
pub mod model;
pub mod numerics;
pub mod stratification;
pub mod symmetrizer;
