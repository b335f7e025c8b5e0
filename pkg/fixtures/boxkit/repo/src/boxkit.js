function clearStage(ctx, width, height) {
  ctx.fillStyle = PALETTE.backdrop;
  ctx.fillRect(0, 0, width, height);
}

function drawBox(ctx, x, y, w, h) {
  ctx.fillStyle = PALETTE.accent;
  ctx.fillRect(x, y, w, h);
}

window.boxkit = { clearStage, drawBox };
