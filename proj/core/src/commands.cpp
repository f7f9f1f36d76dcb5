// Placeholder translation unit; the orchestration commands land with the
// CLI. Kept separate so the core target's file list is stable.
