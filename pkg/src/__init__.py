"""
Veridict: multimodal deception classification pipeline.
"""
