const ctx = document.getElementById("stage").getContext("2d");
boxkit.clearStage(ctx, 400, 300);
boxkit.drawBox(ctx, 40, 40, 120, 80);
boxkit.drawBox(ctx, 200, 60, 100, 100);