# Test package for planar-control-suite
