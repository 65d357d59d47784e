"""Desk-scale laboratory for projections along a nondegenerate spherical curve.

The package is organized around the pipeline curve -> geometry ->
spectral decomposition -> counting:

``curve``      frames, curvature, reparametrizations, plane projections
``dyadic``     dyadic cubes, covers, regularization, separated sets
``fractal``    point clouds, dyadic measures, pushforwards
``geometry``   tubes, dual frequency slabs, cone planks
``incidence``  multiplicity maps, heavy cells, covering experiments
``highlow``    grid fields, frequency masks, high/low splits, decoupling
``dimension``  box-counting fits, exceptional-direction estimates
``cli``        experiment runner (``projlab`` console script)
"""

__version__ = "0.1.0"
