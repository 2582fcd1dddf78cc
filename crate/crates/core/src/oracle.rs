//! Direct transfer-matrix ground truth. (under construction)
