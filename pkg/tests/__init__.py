# Tests for multilinear-pagerank
