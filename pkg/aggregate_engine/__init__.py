# aggregate_engine — LA / Micro-Deval coefficient prediction for carbonate aggregates
# See docs/system_architecture.md for the pipeline layout
