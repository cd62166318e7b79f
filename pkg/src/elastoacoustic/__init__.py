"""High-order dG solver for coupled elasto-acoustic waves on polygonal meshes."""
