//! Spectral predictions from the action profile. (under construction)
