"""Sphere meshes, mesh files and brute-force cross-checks"""
