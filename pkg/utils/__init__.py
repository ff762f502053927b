"""Core geometry of Sol: group law, special functions, geodesic flow and cut locus"""
