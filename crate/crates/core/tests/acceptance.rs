// Placeholder until the full pipeline lands.
